#include "mothscan/pipeline/manifest.hpp"

#include <fstream>

#include "mothscan/errors.hpp"

namespace mothscan::pipeline {

std::filesystem::path write_manifest(const std::filesystem::path& dir, const std::string& command,
                                     const ManifestEntries& entries) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path path = dir / "manifest.txt";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "command=" << command << '\n';
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
    if (!out) throw IoError("short write to " + path.string());
    return path;
}

}  // namespace mothscan::pipeline

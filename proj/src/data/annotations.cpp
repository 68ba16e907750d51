#include "mothscan/data/annotations.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "mothscan/errors.hpp"

namespace mothscan::data {

std::vector<AnnotatedImage> read_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation file: " + path.string());
    std::vector<AnnotatedImage> images;
    std::unordered_map<std::string, std::size_t> index;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == "image_path,x,y,w,h") continue;
        }
        std::istringstream row(line);
        std::string image_path;
        if (!std::getline(row, image_path, ',') || image_path.empty())
            throw IoError("annotation row without image path: " + line);
        std::array<std::string, 4> fields;
        for (std::size_t i = 0; i < fields.size(); ++i)
            if (!std::getline(row, fields[i], ',') && i + 1 < fields.size())
                throw IoError("annotation row with missing fields: " + line);

        auto [it, inserted] = index.try_emplace(image_path, images.size());
        if (inserted) images.push_back({image_path, {}});

        const bool empty_box =
            fields[0].empty() && fields[1].empty() && fields[2].empty() && fields[3].empty();
        if (empty_box) continue;
        BoundingBox box;
        try {
            box.x = std::stoi(fields[0]);
            box.y = std::stoi(fields[1]);
            box.w = std::stoi(fields[2]);
            box.h = std::stoi(fields[3]);
        } catch (const std::exception&) {
            throw IoError("annotation row with malformed box: " + line);
        }
        if (box.w <= 0 || box.h <= 0)
            throw IoError("annotation box must have positive extents: " + line);
        images[it->second].boxes.push_back(box);
    }
    return images;
}

void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotatedImage>& images) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "image_path,x,y,w,h\n";
    for (const AnnotatedImage& image : images) {
        if (image.boxes.empty()) {
            out << image.image_path << ",,,,\n";
            continue;
        }
        for (const BoundingBox& b : image.boxes)
            out << image.image_path << ',' << b.x << ',' << b.y << ',' << b.w << ',' << b.h
                << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mothscan::data

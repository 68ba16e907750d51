#include "mothscan/det/detections_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mothscan/errors.hpp"

namespace mothscan::det {

namespace {
constexpr const char* kHeader = "image_path,x,y,side,probability";
}

void write_detections(const std::filesystem::path& path,
                      const std::vector<NamedDetection>& dets) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << kHeader << '\n';
    char prob[32];
    for (const NamedDetection& d : dets) {
        std::snprintf(prob, sizeof(prob), "%.6f", d.det.probability);
        out << d.image_path << ',' << d.det.box.x << ',' << d.det.box.y << ',' << d.det.box.w
            << ',' << prob << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<NamedDetection> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open detections file: " + path.string());
    std::vector<NamedDetection> dets;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == kHeader) continue;
        }
        std::istringstream row(line);
        NamedDetection d;
        std::string field;
        if (!std::getline(row, d.image_path, ',')) throw IoError("bad detections row: " + line);
        std::array<long, 3> nums{};
        for (long& v : nums) {
            if (!std::getline(row, field, ',')) throw IoError("bad detections row: " + line);
            v = std::stol(field);
        }
        if (!std::getline(row, field)) throw IoError("bad detections row: " + line);
        d.det.box = BoundingBox{static_cast<int>(nums[0]), static_cast<int>(nums[1]),
                                static_cast<int>(nums[2]), static_cast<int>(nums[2])};
        d.det.probability = std::stod(field);
        dets.push_back(std::move(d));
    }
    return dets;
}

namespace {

void draw_box(img::Image& im, const BoundingBox& box, std::uint8_t r, std::uint8_t g,
              std::uint8_t b) {
    const int x0 = std::max(0, box.x);
    const int y0 = std::max(0, box.y);
    const int x1 = std::min(im.width - 1, box.right() - 1);
    const int y1 = std::min(im.height - 1, box.bottom() - 1);
    if (x0 > x1 || y0 > y1) return;
    const auto plot = [&](int x, int y) {
        im.at(x, y, 0) = r;
        im.at(x, y, 1) = g;
        im.at(x, y, 2) = b;
    };
    for (int x = x0; x <= x1; ++x) {
        plot(x, y0);
        plot(x, y1);
    }
    for (int y = y0; y <= y1; ++y) {
        plot(x0, y);
        plot(x1, y);
    }
}

}  // namespace

img::Image render_overlay(const img::Image& im, const std::vector<Detection>& dets,
                          const std::vector<BoundingBox>& gt) {
    img::Image out = im;
    for (const BoundingBox& box : gt) draw_box(out, box, 0, 200, 0);
    for (const Detection& d : dets) draw_box(out, d.box, 255, 0, 255);
    return out;
}

}  // namespace mothscan::det

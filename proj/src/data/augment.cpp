#include "mothscan/data/augment.hpp"

#include "mothscan/errors.hpp"

namespace mothscan::data {

AugMode aug_mode_from_string(const std::string& name) {
    if (name == "none") return AugMode::None;
    if (name == "trans") return AugMode::Trans;
    if (name == "rot") return AugMode::Rot;
    if (name == "both") return AugMode::Both;
    throw ConfigError("unknown augmentation mode: " + name);
}

std::string to_string(AugMode mode) {
    switch (mode) {
        case AugMode::None: return "none";
        case AugMode::Trans: return "trans";
        case AugMode::Rot: return "rot";
        case AugMode::Both: return "both";
    }
    throw ConfigError("unknown augmentation mode value");
}

PatchTransform decode_transform(int id) {
    if (id < 0 || id >= 72) throw ConfigError("transform id out of range: " + std::to_string(id));
    PatchTransform t;
    t.shift = kAugShifts[static_cast<std::size_t>(id / 8)];
    t.rotation = (id % 8) / 2;
    t.flip = (id % 2) != 0;
    return t;
}

std::vector<int> transform_ids(AugMode mode) {
    std::vector<int> ids;
    switch (mode) {
        case AugMode::None: ids.push_back(0); break;
        case AugMode::Trans:
            for (int s = 0; s < 9; ++s) ids.push_back(s * 8);
            break;
        case AugMode::Rot:
            for (int d = 0; d < 8; ++d) ids.push_back(d);
            break;
        case AugMode::Both:
            for (int id = 0; id < 72; ++id) ids.push_back(id);
            break;
    }
    return ids;
}

std::vector<img::Patch> augment_patch(const img::Image& im, PixelPoint center, int side) {
    std::vector<img::Patch> out;
    out.reserve(72);
    for (const PixelPoint& shift : kAugShifts) {
        const img::Patch base =
            img::extract_square_patch(im, {center.x + shift.x, center.y + shift.y}, side);
        for (int rot = 0; rot < 4; ++rot)
            for (int flip = 0; flip < 2; ++flip)
                out.push_back(img::apply_dihedral(base, rot, flip != 0));
    }
    return out;
}

}  // namespace mothscan::data

#include "srdiff/pairs.hpp"

#include <algorithm>
#include <filesystem>

namespace srdiff {

std::string PairSet::manifest() const {
    std::string out;
    for (const auto& it : items) {
        out += it.hr_path;
        out += '\t';
        out += std::to_string(it.crop_y);
        out += '\t';
        out += std::to_string(it.crop_x);
        out += '\t';
        out += std::to_string(patch);
        out += '\t';
        out += std::to_string(scale);
        out += '\n';
    }
    return out;
}

PairItem make_pair(const ImagePlane& hr, const std::string& hr_path, int scale, int patch,
                   Rng* rng) {
    if (patch % 16 != 0 || patch % scale != 0)
        throw ShapeError("make_pair: patch size must be divisible by 16 and by the scale");
    if (hr.height < patch || hr.width < patch)
        throw ShapeError("make_pair: image smaller than the patch size");

    PairItem item;
    item.hr_path = hr_path;
    item.crop_y = rng ? rng->uniform_int(0, hr.height - patch) : (hr.height - patch) / 2;
    item.crop_x = rng ? rng->uniform_int(0, hr.width - patch) : (hr.width - patch) / 2;

    ImagePlane crop(patch, patch);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < patch; ++y)
            for (int x = 0; x < patch; ++x)
                crop.at(c, y, x) = hr.at(c, item.crop_y + y, item.crop_x + x);
    item.hr = std::move(crop);
    item.lr = bicubic_resize(item.hr, patch / scale, patch / scale, /*antialias=*/true);
    return item;
}

PairSet make_pairs(const std::string& hr_dir, int scale, int patch, Rng& rng, bool center_crop) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(hr_dir)) throw IoError("HR directory '" + hr_dir + "' does not exist");

    std::vector<std::string> paths;
    for (const auto& e : fs::directory_iterator(hr_dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());

    PairSet set;
    set.patch = patch;
    set.scale = scale;
    for (const auto& p : paths) {
        ImagePlane hr = load_png(p);
        if (hr.height < patch || hr.width < patch) {
            ++set.skipped;
            continue;
        }
        set.items.push_back(make_pair(hr, p, scale, patch, center_crop ? nullptr : &rng));
    }
    return set;
}

}  // namespace srdiff

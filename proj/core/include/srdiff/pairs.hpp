#pragma once

#include <string>
#include <vector>

#include "srdiff/image.hpp"
#include "srdiff/rng.hpp"

namespace srdiff {

struct PairItem {
    ImagePlane lr, hr;
    std::string hr_path;
    int crop_y = 0, crop_x = 0;
};

/// LR/HR patch pairs with a reproducible manifest. LR patches are always
/// recomputed from the HR crop with the antialiased bicubic kernel.
struct PairSet {
    std::vector<PairItem> items;
    int patch = 0;
    int scale = 0;
    int skipped = 0;  // images smaller than the patch size

    /// One line per pair: hr_path <tab> crop_y <tab> crop_x <tab> patch
    /// <tab> scale.
    std::string manifest() const;
};

/// Crops one patch pair out of an HR image (random offset when rng given,
/// center crop otherwise).
PairItem make_pair(const ImagePlane& hr, const std::string& hr_path, int scale, int patch,
                   Rng* rng);

/// Scans hr_dir for PNGs in sorted order and builds one patch pair per
/// image. Images smaller than the patch are skipped and counted.
PairSet make_pairs(const std::string& hr_dir, int scale, int patch, Rng& rng,
                   bool center_crop = false);

}  // namespace srdiff

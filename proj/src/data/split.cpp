#include "mothscan/data/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "mothscan/errors.hpp"

namespace mothscan::data {

namespace {

/// Largest-remainder apportionment of n into three parts.
std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& fractions) {
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double quota = static_cast<double>(n) * fractions[i];
        counts[i] = static_cast<std::size_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
    return counts;
}

}  // namespace

DatasetSplit split_dataset(const std::vector<AnnotatedImage>& images, const SplitSpec& spec) {
    if (!(spec.train > 0.0 && spec.val > 0.0 && spec.test > 0.0))
        throw ConfigError("split fractions must all be positive");
    if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    if (images.size() < 3) throw SplitError("need at least 3 images to split");

    std::vector<std::size_t> with_moth;
    std::vector<std::size_t> no_moth;
    for (std::size_t i = 0; i < images.size(); ++i)
        (images[i].boxes.empty() ? no_moth : with_moth).push_back(i);
    if (with_moth.empty() || no_moth.empty())
        throw SplitError("both with-moth and no-moth images are required");

    const std::array<double, 3> fractions{spec.train, spec.val, spec.test};
    std::array<std::vector<std::size_t>, 3> subsets;
    std::mt19937_64 rng(spec.seed);
    for (const auto& [name, stratum] :
         {std::pair{"with-moth", &with_moth}, std::pair{"no-moth", &no_moth}}) {
        const std::array<std::size_t, 3> counts = apportion(stratum->size(), fractions);
        if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
            throw SplitError(std::string("stratum '") + name +
                             "' too small to appear in every split");
        std::vector<std::size_t> shuffled = *stratum;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        std::size_t at = 0;
        for (std::size_t s = 0; s < 3; ++s)
            for (std::size_t k = 0; k < counts[s]; ++k) subsets[s].push_back(shuffled[at++]);
    }

    DatasetSplit split;
    for (const auto& [subset, out] : {std::pair{&subsets[0], &split.train},
                                      std::pair{&subsets[1], &split.val},
                                      std::pair{&subsets[2], &split.test}}) {
        std::vector<std::size_t> ordered = *subset;
        std::sort(ordered.begin(), ordered.end());
        for (const std::size_t i : ordered) out->push_back(images[i]);
    }
    return split;
}

}  // namespace mothscan::data

#include "mothscan/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "mothscan/errors.hpp"

namespace mothscan::synth {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t index) {
    return splitmix64(splitmix64(seed + salt) + index);
}

struct Rgb {
    double r, g, b;
};

/// Double-precision canvas the scene is composited on before quantization.
class Canvas {
  public:
    Canvas(int w, int h, Rgb fill) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h, fill) {}

    int width() const { return w_; }
    int height() const { return h_; }
    Rgb& at(int x, int y) { return px_[static_cast<std::size_t>(y) * w_ + x]; }
    const Rgb& at(int x, int y) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }

    void blend(int x, int y, const Rgb& c, double alpha) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_ || alpha <= 0.0) return;
        Rgb& p = at(x, y);
        p.r += (c.r - p.r) * alpha;
        p.g += (c.g - p.g) * alpha;
        p.b += (c.b - p.b) * alpha;
    }

  private:
    int w_, h_;
    std::vector<Rgb> px_;
};

struct Extent {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -(1 << 30), y1 = -(1 << 30);
    void cover(int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
    }
    bool empty() const { return x1 < x0; }
};

/// Rotated ellipse with a one-pixel soft rim. Coverage is 0.5 exactly on the
/// ellipse boundary, so tracking alpha >= 0.5 yields a tight box.
void draw_ellipse(Canvas& canvas, double cx, double cy, double a, double b, double angle,
                  const Rgb& color, Extent* extent, std::mt19937_64* tone_rng = nullptr,
                  double tone_jitter = 0.0) {
    const double reach = std::max(a, b) + 2.0;
    const int x0 = static_cast<int>(std::floor(cx - reach));
    const int x1 = static_cast<int>(std::ceil(cx + reach));
    const int y0 = static_cast<int>(std::floor(cy - reach));
    const int y1 = static_cast<int>(std::ceil(cy + reach));
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    const double sharp = std::max(1.0, std::min(a, b));
    std::uniform_real_distribution<double> tone(-tone_jitter, tone_jitter);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double u = (dx * ca + dy * sa) / a;
            const double v = (-dx * sa + dy * ca) / b;
            const double rho = std::sqrt(u * u + v * v);
            const double alpha = std::clamp(0.5 + (1.0 - rho) * sharp, 0.0, 1.0);
            if (alpha <= 0.0) continue;
            Rgb c = color;
            if (tone_rng && tone_jitter > 0.0) {
                const double t = tone(*tone_rng);
                c.r += t;
                c.g += t;
                c.b += t;
            }
            canvas.blend(x, y, c, alpha);
            if (extent && alpha >= 0.5 && x >= 0 && y >= 0 && x < canvas.width() &&
                y < canvas.height())
                extent->cover(x, y);
        }
    }
}

void draw_soft_disc(Canvas& canvas, double cx, double cy, double radius, const Rgb& delta) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x1 = std::min(canvas.width() - 1, static_cast<int>(std::ceil(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y1 = std::min(canvas.height() - 1, static_cast<int>(std::ceil(cy + radius)));
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if (d2 >= r2) continue;
            const double w = 1.0 - d2 / r2;
            Rgb& p = canvas.at(x, y);
            p.r += delta.r * w;
            p.g += delta.g * w;
            p.b += delta.b * w;
        }
}

void gaussian_blur(Canvas& canvas, double sigma) {
    if (sigma < 0.05) return;
    const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += kernel[static_cast<std::size_t>(i + radius)];
    }
    for (double& k : kernel) k /= sum;

    Canvas tmp = canvas;
    const auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi); };
    for (int y = 0; y < canvas.height(); ++y)
        for (int x = 0; x < canvas.width(); ++x) {
            Rgb acc{0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                const Rgb& p = canvas.at(clampi(x + i, canvas.width() - 1), y);
                const double k = kernel[static_cast<std::size_t>(i + radius)];
                acc.r += p.r * k;
                acc.g += p.g * k;
                acc.b += p.b * k;
            }
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < canvas.height(); ++y)
        for (int x = 0; x < canvas.width(); ++x) {
            Rgb acc{0, 0, 0};
            for (int i = -radius; i <= radius; ++i) {
                const Rgb& p = tmp.at(x, clampi(y + i, canvas.height() - 1));
                const double k = kernel[static_cast<std::size_t>(i + radius)];
                acc.r += p.r * k;
                acc.g += p.g * k;
                acc.b += p.b * k;
            }
            canvas.at(x, y) = acc;
        }
}

double sample(std::mt19937_64& rng, double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

void validate(const SceneConfig& cfg) {
    if (cfg.width < 32 || cfg.height < 32) throw ConfigError("scene extent too small");
    if (cfg.mean_moths < 0.0) throw ConfigError("mean moth count must be nonnegative");
    if (cfg.body_axis_min <= 0.0 || cfg.body_axis_max < cfg.body_axis_min)
        throw ConfigError("moth body axis range is empty or nonpositive");
    if (cfg.wing_probability < 0.0 || cfg.wing_probability > 1.0 ||
        cfg.lure_probability < 0.0 || cfg.lure_probability > 1.0 ||
        cfg.no_moth_fraction < 0.0 || cfg.no_moth_fraction > 1.0)
        throw ConfigError("probabilities must lie in [0, 1]");
    if (cfg.flies_min < 0 || cfg.flies_max < cfg.flies_min || cfg.leaves_min < 0 ||
        cfg.leaves_max < cfg.leaves_min)
        throw ConfigError("distractor count range is empty or negative");
    if (cfg.tint_red_min <= 0.0 || cfg.tint_red_max < cfg.tint_red_min ||
        cfg.tint_green_min <= 0.0 || cfg.tint_green_max < cfg.tint_green_min ||
        cfg.tint_blue_min <= 0.0 || cfg.tint_blue_max < cfg.tint_blue_min)
        throw ConfigError("tint gain range is empty or nonpositive");
    if (cfg.blur_sigma_min < 0.0 || cfg.blur_sigma_max < cfg.blur_sigma_min)
        throw ConfigError("blur sigma range is empty or negative");
    if (cfg.noise_amplitude < 0) throw ConfigError("noise amplitude must be nonnegative");
}

Scene generate_scene(const SceneConfig& cfg, long index) {
    validate(cfg);
    std::mt19937_64 rng(stream_seed(cfg.seed, 0x5CE4E, static_cast<std::uint64_t>(index)));

    Canvas canvas(cfg.width, cfg.height, {208, 201, 186});

    // Liner texture: faint blotches plus per-pixel grain.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
        const double bx = unit(rng) * cfg.width;
        const double by = unit(rng) * cfg.height;
        const double br = sample(rng, 20.0, 80.0);
        const double tone = sample(rng, -7.0, 7.0);
        draw_soft_disc(canvas, bx, by, br, {tone, tone * 0.9, tone * 0.8});
    }
    std::uniform_real_distribution<double> grain(-3.0, 3.0);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            Rgb& p = canvas.at(x, y);
            const double g = grain(rng);
            p.r += g;
            p.g += g;
            p.b += g;
        }

    if (unit(rng) < cfg.lure_probability) {
        const double lx = cfg.width / 2.0 + sample(rng, -30.0, 30.0);
        const double ly = cfg.height / 2.0 + sample(rng, -30.0, 30.0);
        draw_ellipse(canvas, lx, ly, sample(rng, 55.0, 85.0), sample(rng, 55.0, 85.0), 0.0,
                     {176 + sample(rng, -8, 8), 160 + sample(rng, -8, 8),
                      150 + sample(rng, -8, 8)},
                     nullptr);
    }

    const int leaves = std::uniform_int_distribution<int>(cfg.leaves_min, cfg.leaves_max)(rng);
    for (int i = 0; i < leaves; ++i) {
        const double a = sample(rng, 25.0, 60.0);
        draw_ellipse(canvas, unit(rng) * cfg.width, unit(rng) * cfg.height, a,
                     a * sample(rng, 0.3, 0.7), sample(rng, 0.0, 3.141592653589793),
                     {96 + sample(rng, -10, 10), 108 + sample(rng, -10, 10),
                      62 + sample(rng, -10, 10)},
                     nullptr, &rng, 4.0);
    }

    // Flies share the moths' darkness and reach almost their size; only the
    // rounder silhouette and missing wing lobes tell them apart.
    const int flies = std::uniform_int_distribution<int>(cfg.flies_min, cfg.flies_max)(rng);
    for (int i = 0; i < flies; ++i) {
        const double a = sample(rng, 2.2, 7.0);
        const double shade = sample(rng, 45.0, 80.0);
        draw_ellipse(canvas, 6.0 + unit(rng) * (cfg.width - 12), 6.0 + unit(rng) * (cfg.height - 12),
                     a, a * sample(rng, 0.7, 1.0), sample(rng, 0.0, 3.141592653589793),
                     {shade, shade * 0.78, shade * 0.62}, nullptr, &rng, 4.0);
    }

    Scene scene;
    long moth_count = 0;
    if (cfg.mean_moths > 0.0)
        moth_count = std::poisson_distribution<long>(cfg.mean_moths)(rng);
    const double margin = 26.0;
    for (long m = 0; m < moth_count; ++m) {
        const double cx = sample(rng, margin, cfg.width - margin);
        const double cy = sample(rng, margin, cfg.height - margin);
        const double angle = sample(rng, 0.0, 3.141592653589793);
        const double a = sample(rng, cfg.body_axis_min, cfg.body_axis_max);
        const double b = a * sample(rng, 0.42, 0.62);
        const double base = sample(rng, 52.0, 96.0);
        const Rgb body{base, base * 0.74, base * 0.55};

        Extent extent;
        if (unit(rng) < cfg.wing_probability) {
            const double wa = a * sample(rng, 0.7, 0.9);
            const double wb = b * sample(rng, 0.8, 1.0);
            const double off = b + wb * 0.6;
            const double px = -std::sin(angle) * off;
            const double py = std::cos(angle) * off;
            const double wing_base = base + sample(rng, 34.0, 52.0);
            const Rgb wing{wing_base, wing_base * 0.82, wing_base * 0.68};
            draw_ellipse(canvas, cx + px, cy + py, wa, wb, angle, wing, &extent, &rng, 5.0);
            draw_ellipse(canvas, cx - px, cy - py, wa, wb, angle, wing, &extent, &rng, 5.0);
        }
        draw_ellipse(canvas, cx, cy, a, b, angle, body, &extent, &rng, 6.0);

        if (!extent.empty())
            scene.boxes.push_back(
                {extent.x0, extent.y0, extent.x1 - extent.x0 + 1, extent.y1 - extent.y0 + 1});
    }

    // Illumination tint, then optics blur, then sensor noise.
    const double gain_r = sample(rng, cfg.tint_red_min, cfg.tint_red_max);
    const double gain_g = sample(rng, cfg.tint_green_min, cfg.tint_green_max);
    const double gain_b = sample(rng, cfg.tint_blue_min, cfg.tint_blue_max);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            Rgb& p = canvas.at(x, y);
            p.r *= gain_r;
            p.g *= gain_g;
            p.b *= gain_b;
        }

    gaussian_blur(canvas, sample(rng, cfg.blur_sigma_min, cfg.blur_sigma_max));

    scene.image = img::Image::filled(cfg.width, cfg.height, 0, 0, 0);
    std::uniform_int_distribution<int> noise(-cfg.noise_amplitude, cfg.noise_amplitude);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const Rgb& p = canvas.at(x, y);
            const double ch[3] = {p.r, p.g, p.b};
            for (int c = 0; c < 3; ++c) {
                const long v =
                    std::lround(ch[c]) + (cfg.noise_amplitude > 0 ? noise(rng) : 0);
                scene.image.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
            }
        }
    return scene;
}

void generate_dataset(const SceneConfig& cfg, const DatasetCounts& counts,
                      const std::filesystem::path& out_dir) {
    validate(cfg);
    if (counts.train < 1 || counts.val < 1 || counts.test < 1)
        throw ConfigError("every split needs at least one image");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create dataset directory " + (out_dir / "images").string());

    SceneConfig empty_cfg = cfg;
    empty_cfg.mean_moths = 0.0;

    long index = 0;
    char name[48];
    for (const auto& [count, file] : {std::pair{counts.train, "train.csv"},
                                      std::pair{counts.val, "val.csv"},
                                      std::pair{counts.test, "test.csv"}}) {
        std::vector<data::AnnotatedImage> annotations;
        for (long i = 0; i < count; ++i, ++index) {
            std::mt19937_64 pick(stream_seed(cfg.seed, 0xC1EA4, static_cast<std::uint64_t>(index)));
            const bool moth_free =
                std::uniform_real_distribution<double>(0.0, 1.0)(pick) < cfg.no_moth_fraction;
            const Scene scene = generate_scene(moth_free ? empty_cfg : cfg, index);
            std::snprintf(name, sizeof(name), "images/scene_%05ld.png", index);
            img::write_png(scene.image, (out_dir / name).string());
            annotations.push_back({name, scene.boxes});
        }
        data::write_annotations(out_dir / file, annotations);
    }
}

}  // namespace mothscan::synth

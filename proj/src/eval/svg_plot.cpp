#include "mothscan/eval/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mothscan/errors.hpp"

namespace mothscan::eval {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 48;

const char* kColors[] = {"#b4288c", "#2864b4", "#28a050", "#c87820"};

std::string fmt(double v, const char* spec = "%.3g") {
    char buf[32];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range axis_range(const std::vector<Series>& series, bool x_axis) {
    Range r{1e300, -1e300};
    for (const Series& s : series)
        for (const auto& [x, y] : s.points) {
            const double v = x_axis ? x : y;
            r.lo = std::min(r.lo, v);
            r.hi = std::max(r.hi, v);
        }
    if (r.lo > r.hi) return {0.0, 1.0};
    if (r.hi - r.lo < 1e-12) {
        r.lo -= 0.5;
        r.hi += 0.5;
    }
    return r;
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series) {
    const Range xr = axis_range(series, true);
    const Range yr = axis_range(series, false);
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    const auto px = [&](double x) { return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    const auto py = [&](double y) {
        return kMarginTop + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
    };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    // Axes with five ticks per side.
    out << "<g stroke=\"#404040\" stroke-width=\"1\" font-family=\"sans-serif\" "
        << "font-size=\"11\" fill=\"#404040\">\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h << "\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        out << "<text x=\"" << fmt(px(fx), "%.1f") << "\" y=\"" << kMarginTop + plot_h + 16
            << "\" text-anchor=\"middle\" stroke=\"none\">" << fmt(fx) << "</text>\n";
        out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << fmt(py(fy) + 4.0, "%.1f")
            << "\" text-anchor=\"end\" stroke=\"none\">" << fmt(fy) << "</text>\n";
    }
    out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 8
        << "\" text-anchor=\"middle\" stroke=\"none\">" << x_label << "</text>\n";
    out << "<text x=\"14\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" stroke=\"none\" transform=\"rotate(-90 14 "
        << kMarginTop + plot_h / 2 << ")\">" << y_label << "</text>\n</g>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kColors[s % 4];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[s].points)
            out << fmt(px(x), "%.2f") << ',' << fmt(py(y), "%.2f") << ' ';
        out << "\"/>\n";
        if (series.size() > 1) {
            const int ly = kMarginTop + 14 + static_cast<int>(s) * 16;
            out << "<line x1=\"" << kMarginLeft + plot_w - 110 << "\" y1=\"" << ly << "\" x2=\""
                << kMarginLeft + plot_w - 90 << "\" y2=\"" << ly << "\" stroke=\"" << color
                << "\" stroke-width=\"1.5\"/>\n"
                << "<text x=\"" << kMarginLeft + plot_w - 84 << "\" y=\"" << ly + 4
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].name
                << "</text>\n";
        }
    }
    out << "</svg>\n";
    if (!out) throw IoError("failed writing " + path.string());
}

void write_report_plots(const std::filesystem::path& dir, const EvalReport& report) {
    Series miss{"miss rate", {}};
    Series obj_pr{"object", {}};
    Series img_pr{"image", {}};
    Series obj_f2{"object", {}};
    Series img_f2{"image", {}};
    for (const CurvePoint& p : report.points) {
        if (p.object.miss_rate) miss.points.emplace_back(p.object.fppi, *p.object.miss_rate);
        if (p.object.recall) obj_pr.points.emplace_back(*p.object.recall, p.object.precision);
        if (p.image.sensitivity)
            img_pr.points.emplace_back(*p.image.sensitivity, p.image.precision);
        if (p.object.f2) obj_f2.points.emplace_back(p.threshold, *p.object.f2);
        if (p.image.f2) img_f2.points.emplace_back(p.threshold, *p.image.f2);
    }
    write_line_plot(dir / "miss_fppi.svg", "Miss rate vs FPPI", "false positives per image",
                    "miss rate", {miss});
    write_line_plot(dir / "pr_object.svg", "Object precision-recall", "recall", "precision",
                    {obj_pr});
    write_line_plot(dir / "pr_image.svg", "Image precision-recall", "recall", "precision",
                    {img_pr});
    write_line_plot(dir / "f2_thresholds.svg", "F2 score vs decision threshold", "threshold",
                    "F2", {obj_f2, img_f2});
}

}  // namespace mothscan::eval

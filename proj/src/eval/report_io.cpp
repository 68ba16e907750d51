#include "mothscan/eval/report_io.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "mothscan/errors.hpp"

namespace mothscan::eval {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    return out;
}

}  // namespace

void write_curves_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out = open_out(path);
    out << "threshold,object_miss_rate,object_fppi,object_precision,object_recall,object_f2,"
           "image_sensitivity,image_specificity,image_precision,image_f2\n";
    for (const CurvePoint& p : report.points) {
        out << num(p.threshold) << ',' << num(p.object.miss_rate) << ',' << num(p.object.fppi)
            << ',' << num(p.object.precision) << ',' << num(p.object.recall) << ','
            << num(p.object.f2) << ',' << num(p.image.sensitivity) << ','
            << num(p.image.specificity) << ',' << num(p.image.precision) << ','
            << num(p.image.f2) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out = open_out(path);
    out << "object_pr_auc,log_avg_miss_rate,image_pr_auc,image_sens_spec_auc\n";
    out << num(report.object_pr_auc) << ',' << num(report.log_avg_miss_rate) << ','
        << num(report.image_pr_auc) << ',' << num(report.image_sens_spec_auc) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace mothscan::eval

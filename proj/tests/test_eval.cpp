#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "mothscan/errors.hpp"
#include "mothscan/eval/metrics.hpp"
#include "mothscan/eval/report_io.hpp"
#include "mothscan/eval/svg_plot.hpp"
#include "mothscan/eval/sweep.hpp"

using namespace mothscan;

namespace {

det::Detection det_at(int x, int y, int w, int h, double prob) {
    det::Detection d;
    d.box = {x, y, w, h};
    d.probability = prob;
    return d;
}

/// Literal reference matcher: walk ground truth in list order, give each box
/// the best still-free detection overlapping it above 0.5 IOMin, preferring
/// higher probability, then smaller box y, then smaller box x.
eval::MatchResult reference_match(const std::vector<BoundingBox>& gt,
                                  const std::vector<det::Detection>& dets) {
    eval::MatchResult result;
    std::vector<bool> used(dets.size(), false);
    for (std::size_t g = 0; g < gt.size(); ++g) {
        std::size_t best = dets.size();
        for (std::size_t d = 0; d < dets.size(); ++d) {
            if (used[d] || eval::iomin(gt[g], dets[d].box) <= 0.5) continue;
            if (best == dets.size()) {
                best = d;
                continue;
            }
            const auto& cand = dets[d];
            const auto& top = dets[best];
            if (cand.probability != top.probability) {
                if (cand.probability > top.probability) best = d;
            } else if (cand.box.y != top.box.y) {
                if (cand.box.y < top.box.y) best = d;
            } else if (cand.box.x < top.box.x) {
                best = d;
            }
        }
        if (best == dets.size()) {
            result.missed.push_back(g);
        } else {
            used[best] = true;
            result.pairs.emplace_back(g, best);
        }
    }
    for (std::size_t d = 0; d < dets.size(); ++d)
        if (!used[d]) result.false_positives.push_back(d);
    return result;
}

}  // namespace

TEST_CASE("iomin uses the smaller box as denominator") {
    const BoundingBox a{0, 0, 10, 10};
    CHECK(eval::iomin(a, {0, 0, 10, 10}) == doctest::Approx(1.0));
    CHECK(eval::iomin(a, {5, 5, 10, 10}) == doctest::Approx(0.25));
    CHECK(eval::iomin(a, {2, 2, 4, 4}) == doctest::Approx(1.0));  // contained small box
    CHECK(eval::iomin(a, {20, 20, 10, 10}) == doctest::Approx(0.0));
    CHECK(eval::iomin(a, {10, 0, 10, 10}) == doctest::Approx(0.0));  // edge contact only
    CHECK(eval::iomin({0, 0, 20, 5}, {8, 0, 4, 20}) == doctest::Approx(0.25));  // crossing
    // A detection covering a tall narrow box scores 1 even though the
    // union-based overlap would only be 0.2.
    CHECK(eval::iomin({8, 0, 4, 20}, {0, 0, 20, 20}) == doctest::Approx(1.0));
    CHECK(eval::iomin(a, {5, 5, 10, 10}) == eval::iomin({5, 5, 10, 10}, a));
    CHECK_THROWS_AS(eval::iomin(a, {0, 0, 0, 5}), MetricError);
    CHECK_THROWS_AS(eval::iomin({0, 0, 5, 0}, a), MetricError);
}

TEST_CASE("iomin agrees with pixel counting on random integer boxes") {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<int> pos(0, 30), len(1, 20);
    for (int trial = 0; trial < 1000; ++trial) {
        const BoundingBox a{pos(rng), pos(rng), len(rng), len(rng)};
        const BoundingBox b{pos(rng), pos(rng), len(rng), len(rng)};
        long inter = 0;
        for (int x = 0; x < 60; ++x)
            for (int y = 0; y < 60; ++y) {
                const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
                const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
                if (in_a && in_b) ++inter;
            }
        const double smaller = double(std::min(a.area(), b.area()));
        CHECK(eval::iomin(a, b) == double(inter) / smaller);  // exact, same integers
    }
}

TEST_CASE("fbeta spot values") {
    CHECK(eval::fbeta(2.0 / 3.0, 0.8, 2.0) == doctest::Approx(0.7692).epsilon(1e-4));
    for (double p : {0.1, 0.5, 0.9})
        for (double beta : {1.0, 2.0})
            CHECK(eval::fbeta(p, p, beta) == doctest::Approx(p));
    CHECK(eval::fbeta(0.0, 0.0, 2.0) == 0.0);
    CHECK(eval::fbeta(1.0, 0.0, 2.0) == 0.0);
}

TEST_CASE("match walks ground truth in annotation order") {
    const std::vector<BoundingBox> gt{{0, 0, 10, 10}, {4, 0, 10, 10}};
    // The only detection overlaps both boxes; the first annotation claims it.
    const std::vector<det::Detection> dets{det_at(4, 0, 10, 10, 0.9)};
    const auto r = eval::match(gt, dets);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(r.missed == std::vector<std::size_t>{1});
    CHECK(r.false_positives.empty());
}

TEST_CASE("match prefers probability, then box y, then box x") {
    const std::vector<BoundingBox> gt{{0, 0, 10, 10}};
    SUBCASE("higher probability wins") {
        const std::vector<det::Detection> dets{det_at(0, 0, 10, 10, 0.7),
                                               det_at(2, 2, 10, 10, 0.9)};
        const auto r = eval::match(gt, dets);
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0].second == 1);
        CHECK(r.false_positives == std::vector<std::size_t>{0});
    }
    SUBCASE("probability tie falls to smaller y") {
        const std::vector<det::Detection> dets{det_at(0, 2, 10, 10, 0.8),
                                               det_at(1, 1, 10, 10, 0.8)};
        const auto r = eval::match(gt, dets);
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0].second == 1);
    }
    SUBCASE("full tie falls to smaller x") {
        const std::vector<det::Detection> dets{det_at(2, 1, 10, 10, 0.8),
                                               det_at(1, 1, 10, 10, 0.8)};
        const auto r = eval::match(gt, dets);
        REQUIRE(r.pairs.size() == 1);
        CHECK(r.pairs[0].second == 1);
    }
}

TEST_CASE("match requires strictly more than half overlap") {
    const std::vector<BoundingBox> gt{{0, 0, 10, 10}};
    // Intersection exactly half the smaller area: not a match.
    const auto r = eval::match(gt, {det_at(0, 5, 10, 10, 0.9)});
    CHECK(r.pairs.empty());
    CHECK(r.missed == std::vector<std::size_t>{0});
    CHECK(r.false_positives == std::vector<std::size_t>{0});
}

TEST_CASE("match and object metrics agree with the literal reference") {
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<int> n_gt(0, 6), n_det(0, 10);
    std::uniform_int_distribution<int> pos(0, 40), len(4, 15), prob_step(1, 10);
    for (int scene = 0; scene < 500; ++scene) {
        std::vector<BoundingBox> gt;
        for (int g = n_gt(rng); g > 0; --g)
            gt.push_back({pos(rng), pos(rng), len(rng), len(rng)});
        std::vector<det::Detection> dets;
        for (int d = n_det(rng); d > 0; --d)
            dets.push_back(det_at(pos(rng), pos(rng), len(rng), len(rng),
                                  prob_step(rng) / 10.0));  // coarse probs force ties
        const auto got = eval::match(gt, dets);
        const auto want = reference_match(gt, dets);
        CHECK(got.pairs == want.pairs);
        CHECK(got.missed == want.missed);
        CHECK(got.false_positives == want.false_positives);

        eval::MatchCounts counts;
        counts.ground_truth = long(gt.size());
        counts.detections = long(dets.size());
        counts.matched = long(got.pairs.size());
        counts.images = 1;
        const auto m = eval::object_metrics(counts);
        if (gt.empty()) {
            CHECK(!m.miss_rate);
            CHECK(!m.recall);
        } else {
            CHECK(*m.miss_rate ==
                  doctest::Approx(double(want.missed.size()) / double(gt.size())));
            CHECK(*m.recall == doctest::Approx(double(want.pairs.size()) / double(gt.size())));
        }
        CHECK(m.fppi == doctest::Approx(double(want.false_positives.size())));
        if (dets.empty())
            CHECK(m.precision == 1.0);
        else
            CHECK(m.precision ==
                  doctest::Approx(double(want.pairs.size()) / double(dets.size())));
    }
}

TEST_CASE("object metrics handle empty corners") {
    eval::MatchCounts counts;
    counts.images = 4;
    const auto none = eval::object_metrics(counts);
    CHECK(!none.miss_rate);
    CHECK(none.precision == 1.0);
    CHECK(none.fppi == 0.0);
    CHECK(!none.recall);
    CHECK(!none.f2);

    counts.ground_truth = 8;
    counts.detections = 6;
    counts.matched = 4;
    const auto m = eval::object_metrics(counts);
    CHECK(*m.miss_rate == doctest::Approx(0.5));
    CHECK(m.fppi == doctest::Approx(2.0 / 4.0));
    CHECK(m.precision == doctest::Approx(4.0 / 6.0));
    CHECK(*m.recall == doctest::Approx(0.5));
    CHECK(*m.f2 == doctest::Approx(eval::fbeta(4.0 / 6.0, 0.5, 2.0)));
}

TEST_CASE("image metrics follow the any-detection proposal rule") {
    eval::ImageCounts counts;
    counts.moth_images = 4;
    counts.clean_images = 6;
    counts.true_proposals = 3;
    counts.false_proposals = 2;
    const auto m = eval::image_metrics(counts);
    CHECK(*m.sensitivity == doctest::Approx(0.75));
    CHECK(*m.specificity == doctest::Approx(4.0 / 6.0));
    CHECK(m.precision == doctest::Approx(3.0 / 5.0));
    CHECK(*m.f2 == doctest::Approx(eval::fbeta(0.6, 0.75, 2.0)));

    eval::ImageCounts clean_only;
    clean_only.clean_images = 3;
    const auto c = eval::image_metrics(clean_only);
    CHECK(!c.sensitivity);
    CHECK(*c.specificity == doctest::Approx(1.0));
    CHECK(c.precision == 1.0);  // no proposals
}

TEST_CASE("sweep produces one point per distinct probability, descending") {
    eval::ImageEval image;
    image.image_path = "a.png";
    image.gt = {{0, 0, 10, 10}};
    image.dets = {det_at(0, 0, 10, 10, 0.9), det_at(30, 30, 10, 10, 0.4),
                  det_at(60, 60, 10, 10, 0.9), det_at(90, 90, 10, 10, 0.6)};
    const auto report = eval::sweep({image});
    REQUIRE(report.points.size() == 3);
    CHECK(report.points[0].threshold == 0.9);
    CHECK(report.points[1].threshold == 0.6);
    CHECK(report.points[2].threshold == 0.4);
    // At 0.9 both 0.9-detections are in: one match, one false positive.
    CHECK(*report.points[0].object.recall == doctest::Approx(1.0));
    CHECK(report.points[0].object.fppi == doctest::Approx(1.0));
    CHECK(report.points[2].object.fppi == doctest::Approx(3.0));
}

TEST_CASE("sweep hand trace: curve points, PR area and miss-rate average") {
    // One image, three moths. Matches enter at 0.9 and 0.5; false positives
    // at 0.8, 0.7 and 0.6.
    eval::ImageEval image;
    image.image_path = "trace.png";
    image.gt = {{0, 0, 10, 10}, {20, 20, 10, 10}, {40, 40, 10, 10}};
    image.dets = {det_at(0, 0, 10, 10, 0.9), det_at(60, 60, 10, 10, 0.8),
                  det_at(80, 80, 10, 10, 0.7), det_at(100, 100, 10, 10, 0.6),
                  det_at(20, 20, 10, 10, 0.5)};
    const auto report = eval::sweep({image});
    REQUIRE(report.points.size() == 5);

    const auto& p9 = report.points[0].object;
    CHECK(*p9.miss_rate == doctest::Approx(2.0 / 3.0));
    CHECK(p9.fppi == 0.0);
    CHECK(p9.precision == doctest::Approx(1.0));
    const auto& p5 = report.points[4].object;
    CHECK(*p5.miss_rate == doctest::Approx(1.0 / 3.0));
    CHECK(p5.fppi == doctest::Approx(3.0));
    CHECK(p5.precision == doctest::Approx(2.0 / 5.0));

    // PR points, recall ascending with the synthetic (0, p0) start:
    // (0,1) (1/3,1) (1/3,1/2) (1/3,1/3) (1/3,1/4) (2/3,2/5).
    const double expect_auc =
        (1.0 / 3.0) * 1.0 + (1.0 / 3.0) * (0.25 + 0.4) / 2.0;
    CHECK(*report.object_pr_auc == doctest::Approx(expect_auc));

    // Miss rate is 2/3 for the four FPPI samples below 3, then 1/3 once the
    // FPPI-3 point qualifies (ties resolve to the latest, lowest-miss point).
    const double expect_lamr =
        std::exp((4.0 * std::log(2.0 / 3.0) + 5.0 * std::log(1.0 / 3.0)) / 9.0);
    CHECK(*report.log_avg_miss_rate == doctest::Approx(expect_lamr));
}

TEST_CASE("sweep on clean images only leaves object summaries undefined") {
    eval::ImageEval image;
    image.image_path = "clean.png";
    image.dets = {det_at(0, 0, 10, 10, 0.7)};
    const auto report = eval::sweep({image});
    REQUIRE(report.points.size() == 1);
    CHECK(!report.points[0].object.miss_rate);
    CHECK(!report.object_pr_auc);
    CHECK(!report.log_avg_miss_rate);
    CHECK(!report.image_pr_auc);       // sensitivity undefined without moth images
    CHECK(*report.points[0].image.specificity == 0.0);
}

TEST_CASE("sweep without any detection yields the single unit-threshold point") {
    eval::ImageEval with_moth;
    with_moth.image_path = "m.png";
    with_moth.gt = {{0, 0, 10, 10}};
    eval::ImageEval clean;
    clean.image_path = "c.png";
    const auto report = eval::sweep({with_moth, clean});
    REQUIRE(report.points.size() == 1);
    CHECK(report.points[0].threshold == 1.0);
    CHECK(*report.points[0].object.miss_rate == 1.0);
    CHECK(report.points[0].object.precision == 1.0);
    CHECK(*report.points[0].object.recall == 0.0);
    CHECK(*report.points[0].image.sensitivity == 0.0);
    CHECK(*report.points[0].image.specificity == 1.0);
    CHECK(*report.object_pr_auc == 0.0);
    CHECK(eval::sweep({with_moth, clean}).points[0].threshold == 1.0);
    CHECK_THROWS_AS(eval::sweep({}), MetricError);
}

TEST_CASE("best f2 threshold breaks ties towards the higher threshold") {
    // Two images so image-level F2 is defined; detections tuned so the object
    // F2 is identical at thresholds 0.8 and 0.6.
    eval::ImageEval image;
    image.image_path = "t.png";
    image.gt = {{0, 0, 10, 10}, {20, 20, 10, 10}};
    // 0.8: one match, no FPs. 0.6: second match plus one FP enters together.
    image.dets = {det_at(0, 0, 10, 10, 0.8), det_at(20, 20, 10, 10, 0.6),
                  det_at(60, 60, 10, 10, 0.6)};
    const auto report = eval::sweep({image});
    REQUIRE(report.points.size() == 2);
    const double f2_hi = *report.points[0].object.f2;   // p=1, r=1/2
    const double f2_lo = *report.points[1].object.f2;   // p=2/3, r=1
    CHECK(f2_hi == doctest::Approx(eval::fbeta(1.0, 0.5, 2.0)));
    CHECK(f2_lo == doctest::Approx(eval::fbeta(2.0 / 3.0, 1.0, 2.0)));
    CHECK(f2_lo > f2_hi);
    CHECK(*report.object_best_f2_threshold == 0.6);

    // Same F2 at both thresholds: the earlier (higher) threshold is kept.
    eval::ImageEval tie;
    tie.image_path = "tie.png";
    tie.gt = {{0, 0, 10, 10}};
    tie.dets = {det_at(0, 0, 10, 10, 0.9), det_at(50, 50, 10, 10, 0.3)};
    const auto tie_report = eval::sweep({tie});
    REQUIRE(tie_report.points.size() == 2);
    if (*tie_report.points[0].object.f2 >= *tie_report.points[1].object.f2)
        CHECK(*tie_report.object_best_f2_threshold == 0.9);
}

TEST_CASE("curves and summary CSVs have the documented shape") {
    eval::ImageEval image;
    image.image_path = "csv.png";
    image.gt = {{0, 0, 10, 10}};
    image.dets = {det_at(0, 0, 10, 10, 0.75), det_at(40, 40, 10, 10, 0.25)};
    const auto report = eval::sweep({image});

    testutil::TempDir dir("evalcsv");
    eval::write_curves_csv(dir.path() / "curves.csv", report);
    eval::write_summary_csv(dir.path() / "summary.csv", report);

    std::ifstream curves(dir.path() / "curves.csv");
    std::string line;
    std::getline(curves, line);
    CHECK(line ==
          "threshold,object_miss_rate,object_fppi,object_precision,object_recall,object_f2,"
          "image_sensitivity,image_specificity,image_precision,image_f2");
    int rows = 0;
    while (std::getline(curves, line)) ++rows;
    CHECK(rows == 2);

    std::ifstream summary(dir.path() / "summary.csv");
    std::getline(summary, line);
    CHECK(line == "object_pr_auc,log_avg_miss_rate,image_pr_auc,image_sens_spec_auc");
    std::getline(summary, line);
    // Perfect ranking: both PR areas 1, miss rate hits 0 inside the FPPI
    // window so its geometric mean collapses to 0. No clean image, so the
    // sensitivity-specificity area stays empty.
    CHECK(line == "1,0,1,");
}

TEST_CASE("undefined cells are written empty") {
    eval::ImageEval clean;
    clean.image_path = "c.png";
    clean.dets = {det_at(0, 0, 10, 10, 0.5)};
    const auto report = eval::sweep({clean});
    testutil::TempDir dir("evalempty");
    eval::write_curves_csv(dir.path() / "curves.csv", report);
    eval::write_summary_csv(dir.path() / "summary.csv", report);
    std::ifstream curves(dir.path() / "curves.csv");
    std::string header, row;
    std::getline(curves, header);
    std::getline(curves, row);
    // threshold, empty miss, fppi, precision, empty recall, empty f2, empty
    // sensitivity, specificity, precision, empty f2.
    CHECK(row == "0.5,,1,0,,,,0,0,");
    std::ifstream summary(dir.path() / "summary.csv");
    std::getline(summary, header);
    std::getline(summary, row);
    CHECK(row == ",,,");
}

TEST_CASE("svg plots are deterministic and complete") {
    eval::ImageEval image;
    image.image_path = "svg.png";
    image.gt = {{0, 0, 10, 10}};
    image.dets = {det_at(0, 0, 10, 10, 0.8), det_at(40, 40, 10, 10, 0.3)};
    const auto report = eval::sweep({image});

    testutil::TempDir dir("evalsvg");
    std::filesystem::create_directories(dir.path() / "a");
    std::filesystem::create_directories(dir.path() / "b");
    eval::write_report_plots(dir.path() / "a", report);
    eval::write_report_plots(dir.path() / "b", report);
    for (const char* name : {"miss_fppi.svg", "pr_object.svg", "pr_image.svg",
                             "f2_thresholds.svg"}) {
        std::ifstream fa(dir.path() / "a" / name), fb(dir.path() / "b" / name);
        REQUIRE(fa.good());
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        CHECK(sa.str() == sb.str());
        CHECK(sa.str().find("<svg") != std::string::npos);
        CHECK(sa.str().find("polyline") != std::string::npos);
    }
}

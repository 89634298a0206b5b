#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "chromaforge/errors.hpp"
#include "chromaforge/eval.hpp"
#include "testsupport.hpp"

using namespace chromaforge;

namespace {

AttackResult stub_result(const std::string& method, AttackStatus status,
                         bool success, double l2, int first_success) {
    AttackResult r;
    r.method = method;
    r.status = status;
    r.success = success;
    r.norms.l2 = l2;
    r.norms.l0_percent = 10.0;
    r.norms.linf_255 = 4.0;
    r.first_success = first_success;
    r.iterations_used = first_success > 0 ? first_success : 25;
    return r;
}

} // namespace

TEST_CASE("summarize groups by method in first-seen order") {
    std::vector<AttackResult> results;
    results.push_back(stub_result("ace", AttackStatus::Succeeded, true, 1.0, 10));
    results.push_back(stub_result("ace", AttackStatus::Failed, false, 0.0, -1));
    results.push_back(stub_result("fgsm", AttackStatus::Succeeded, true, 3.0, 1));
    results.push_back(stub_result("ace", AttackStatus::Succeeded, true, 2.0, 30));
    results.push_back(
        stub_result("ace", AttackStatus::AlreadyMisclassified, true, 0.0, -1));

    const EvalReport report = summarize(results);
    REQUIRE(report.rows.size() == 2);

    const EvalRow& ace = report.rows[0];
    CHECK(ace.method == "ace");
    CHECK(ace.n == 3); // the skipped input does not count
    CHECK(*ace.success_pct == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
    CHECK(*ace.l2 == doctest::Approx(1.5).epsilon(1e-12));          // successes only
    CHECK(*ace.mean_iters == doctest::Approx(20.0).epsilon(1e-12)); // (10+30)/2

    const EvalRow& fg = report.rows[1];
    CHECK(fg.method == "fgsm");
    CHECK(fg.n == 1);
    CHECK(*fg.success_pct == 100.0);

    const std::string csv = report.to_csv();
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "method,model_src,model_dst,n,success_pct,l0_pct,l2,linf255,mean_iters");
    std::string row;
    std::getline(lines, row);
    CHECK(row.substr(0, 4) == "ace,");
}

TEST_CASE("failed-only methods report NA norms") {
    std::vector<AttackResult> results;
    results.push_back(stub_result("bim", AttackStatus::Failed, false, 0.0, -1));
    const EvalReport report = summarize(results);
    REQUIRE(report.rows.size() == 1);
    CHECK(*report.rows[0].success_pct == 0.0);
    CHECK(!report.rows[0].l2.has_value());
    CHECK(!report.rows[0].mean_iters.has_value());
    CHECK(report.to_csv().find("NA") != std::string::npos);
}

TEST_CASE("summarize rejects empty and all-skipped inputs") {
    CHECK_THROWS_AS(summarize({}), ValueError);
    std::vector<AttackResult> skipped;
    skipped.push_back(
        stub_result("ace", AttackStatus::AlreadyMisclassified, true, 0.0, -1));
    CHECK_THROWS_AS(summarize(skipped), ValueError);
}

TEST_CASE("format_double round trips through stod") {
    for (double v : {0.0, 1.0, -1.0, 0.1, 1.0 / 3.0, 66.66666666666667, 1e-12,
                     123456.789, 2.0 / 255.0}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("transfer matrix on rigged models") {
    // Model A: channel-mean. Model B: channels 1 and 2 swapped, so A and B
    // agree on class 0 but swap green/blue verdicts. Model C: constant class 1.
    const Classifier a = ts::channel_mean_classifier(4, 4);
    Classifier b = ts::channel_mean_classifier(4, 4);
    {
        auto& p = b.params();
        const size_t n_in = 4 * 4 * 3;
        for (size_t i = 0; i < n_in; ++i)
            std::swap(p[1 * n_in + i], p[2 * n_in + i]);
    }
    Classifier c = ts::channel_mean_classifier(4, 4);
    {
        auto& p = c.params();
        std::fill(p.begin(), p.end(), 0.0);
        p[c.num_params() - 2] = 1.0; // bias of class 1
    }

    std::vector<LabeledImage> images;
    images.push_back({ts::solid(4, 4, 0.9, 0.3, 0.2), 0});
    images.push_back({ts::solid(4, 4, 0.2, 0.9, 0.3), 1});
    images.push_back({ts::solid(4, 4, 0.8, 0.4, 0.3), 0});

    // The "attack" nudges the winning channel down just enough to flip A,
    // recorded as success for bookkeeping checks.
    size_t calls = 0;
    const AttackFn attack = [&](const Classifier& model, const LabeledImage& img,
                                size_t) {
        ++calls;
        AttackResult r;
        r.method = "stub";
        r.true_label = img.label;
        r.label_before = model.predict(img.image);
        Image adv = img.image;
        for (size_t p = 0; p < adv.num_pixels(); ++p) {
            adv.pixels[p * 3 + img.label] -= 0.55;
            adv.pixels[p * 3 + (img.label + 1) % 3] += 0.55;
        }
        for (double& v : adv.pixels) v = std::clamp(v, 0.0, 1.0);
        r.adversarial = std::move(adv);
        r.label_after = model.predict(r.adversarial);
        r.success = r.label_after != img.label;
        r.status = r.success ? AttackStatus::Succeeded : AttackStatus::Failed;
        r.norms = perturbation_norms(img.image, r.adversarial);
        r.iterations_used = 1;
        r.first_success = r.success ? 1 : -1;
        return r;
    };

    const TransferMatrix tm =
        transfer_matrix({&a, &b, &c}, {"A", "B", "C"}, images, attack);
    REQUIRE(tm.models == std::vector<std::string>{"A", "B", "C"});
    REQUIRE(tm.entries.size() == 3);

    // A classifies all three correctly; B agrees on the two label-0 images
    // (it swaps green/blue, label 0 logits unchanged); C gets only image 1.
    CHECK(tm.entries[0][0].agreement == 3);
    CHECK(*tm.entries[0][0].success_pct == 100.0); // diagonal: the rigged flip works
    CHECK(tm.entries[0][1].agreement == 2);
    CHECK(tm.entries[1][0].agreement == 2);
    CHECK(tm.entries[0][2].agreement == 1);

    // C misclassifies both label-0 images and the attack never runs for them;
    // attacks run once per (model, correctly-classified image): 3 + 2 + 1.
    CHECK(calls == 6);

    // C's row against C itself: constant model never changes its mind.
    CHECK(tm.entries[2][2].agreement == 1);
    CHECK(*tm.entries[2][2].success_pct == 0.0);

    // Rows with zero agreement stay NA.
    Classifier wrong = ts::channel_mean_classifier(4, 4);
    {
        auto& p = wrong.params();
        std::fill(p.begin(), p.end(), 0.0);
        p[wrong.num_params() - 1] = 1.0; // constant class 2: wrong on all three
    }
    const TransferMatrix tm2 =
        transfer_matrix({&a, &wrong}, {"A", "W"}, images, attack);
    CHECK(tm2.entries[1][1].agreement == 0);
    CHECK(!tm2.entries[1][1].success_pct.has_value());
    CHECK(tm2.entries[0][1].agreement == 0);

    const EvalReport rep = tm.report("stub");
    REQUIRE(rep.rows.size() == 9);
    CHECK(rep.rows[0].model_src == "A");
    CHECK(rep.rows[1].model_dst == "B");
}

TEST_CASE("transfer matrix input validation") {
    const Classifier a = ts::channel_mean_classifier(4, 4);
    const AttackFn nop = [](const Classifier&, const LabeledImage& img, size_t) {
        AttackResult r;
        r.adversarial = img.image;
        return r;
    };
    CHECK_THROWS_AS(transfer_matrix({&a}, {"A", "B"}, {}, nop), ValueError);
    CHECK_THROWS_AS(transfer_matrix({}, {}, {}, nop), ValueError);
}

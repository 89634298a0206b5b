#include "chromaforge/eval.hpp"

#include <charconv>
#include <map>

#include "chromaforge/errors.hpp"

namespace chromaforge {

std::string format_double(double v) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw ValueError("double formatting failed");
    return std::string(buf, ptr);
}

namespace {

std::string cell(const std::optional<double>& v) {
    return v ? format_double(*v) : "NA";
}

struct Accum {
    int n = 0;
    int successes = 0;
    double l0 = 0, l2 = 0, linf = 0, iters = 0;

    void add(const AttackResult& r) {
        ++n;
        if (r.success) {
            ++successes;
            l0 += r.norms.l0_percent;
            l2 += r.norms.l2;
            linf += r.norms.linf_255;
            iters += r.iterations_used;
        }
    }

    void fill(EvalRow& row) const {
        row.n = n;
        if (n > 0) row.success_pct = 100.0 * successes / n;
        if (successes > 0) {
            row.l0_pct = l0 / successes;
            row.l2 = l2 / successes;
            row.linf255 = linf / successes;
            row.mean_iters = iters / successes;
        }
    }
};

} // namespace

std::string EvalReport::to_csv() const {
    std::string out =
        "method,model_src,model_dst,n,success_pct,l0_pct,l2,linf255,mean_iters\n";
    for (const EvalRow& r : rows) {
        out += r.method + "," + r.model_src + "," + r.model_dst + ","
               + std::to_string(r.n) + "," + cell(r.success_pct) + ","
               + cell(r.l0_pct) + "," + cell(r.l2) + "," + cell(r.linf255) + ","
               + cell(r.mean_iters) + "\n";
    }
    return out;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const EvalRow& r : rows) {
        nlohmann::json jr{{"method", r.method},
                          {"model_src", r.model_src},
                          {"model_dst", r.model_dst},
                          {"n", r.n}};
        auto put = [&jr](const char* key, const std::optional<double>& v) {
            if (v)
                jr[key] = *v;
            else
                jr[key] = nullptr;
        };
        put("success_pct", r.success_pct);
        put("l0_pct", r.l0_pct);
        put("l2", r.l2);
        put("linf255", r.linf255);
        put("mean_iters", r.mean_iters);
        rows_json.push_back(std::move(jr));
    }
    return nlohmann::json{{"rows", std::move(rows_json)}};
}

EvalReport summarize(const std::vector<AttackResult>& results) {
    if (results.empty()) throw ValueError("summarize: no results");
    std::vector<std::string> order;
    std::map<std::string, Accum> by_method;
    for (const AttackResult& r : results) {
        if (r.status == AttackStatus::AlreadyMisclassified) continue;
        if (!by_method.count(r.method)) order.push_back(r.method);
        by_method[r.method].add(r);
    }
    if (order.empty()) throw ValueError("summarize: every input was already misclassified");
    EvalReport report;
    for (const std::string& m : order) {
        EvalRow row;
        row.method = m;
        by_method[m].fill(row);
        report.rows.push_back(std::move(row));
    }
    return report;
}

EvalReport TransferMatrix::report(const std::string& method) const {
    EvalReport rep;
    for (size_t a = 0; a < models.size(); ++a) {
        for (size_t b = 0; b < models.size(); ++b) {
            EvalRow row;
            row.method = method;
            row.model_src = models[a];
            row.model_dst = models[b];
            const TransferEntry& e = entries[a][b];
            row.n = e.agreement;
            row.success_pct = e.success_pct;
            row.l0_pct = e.l0_pct;
            row.l2 = e.l2;
            row.linf255 = e.linf255;
            row.mean_iters = e.mean_iters;
            rep.rows.push_back(std::move(row));
        }
    }
    return rep;
}

TransferMatrix transfer_matrix(const std::vector<const Classifier*>& models,
                               const std::vector<std::string>& names,
                               const std::vector<LabeledImage>& images,
                               const AttackFn& attack) {
    if (models.size() < 1 || models.size() != names.size())
        throw ValueError("transfer_matrix: need named models");
    if (images.empty()) throw ValueError("transfer_matrix: no images");

    const size_t m = models.size();
    // correct[k][i]: model k classifies image i correctly.
    std::vector<std::vector<bool>> correct(m, std::vector<bool>(images.size()));
    for (size_t k = 0; k < m; ++k)
        for (size_t i = 0; i < images.size(); ++i)
            correct[k][i] = models[k]->predict(images[i].image) == images[i].label;

    TransferMatrix tm;
    tm.models = names;
    tm.entries.assign(m, std::vector<TransferEntry>(m));

    for (size_t a = 0; a < m; ++a) {
        // One attack per source-correct image, reused across destinations.
        std::vector<std::optional<AttackResult>> res(images.size());
        for (size_t i = 0; i < images.size(); ++i)
            if (correct[a][i]) res[i] = attack(*models[a], images[i], i);
        for (size_t b = 0; b < m; ++b) {
            TransferEntry& e = tm.entries[a][b];
            Accum acc;
            int fooled = 0;
            for (size_t i = 0; i < images.size(); ++i) {
                if (!correct[a][i] || !correct[b][i]) continue;
                ++e.agreement;
                const AttackResult& r = *res[i];
                acc.add(r);
                if (models[b]->predict(r.adversarial) != images[i].label) ++fooled;
            }
            if (e.agreement > 0) {
                e.success_pct = 100.0 * fooled / e.agreement;
                EvalRow tmp;
                acc.fill(tmp);
                e.l0_pct = tmp.l0_pct;
                e.l2 = tmp.l2;
                e.linf255 = tmp.linf255;
                e.mean_iters = tmp.mean_iters;
            }
        }
    }
    return tm;
}

} // namespace chromaforge

#include "irrig/harness/compare.hpp"

#include <algorithm>
#include <cstdio>

namespace irrig::harness {

namespace {

double pct(double x, double base) { return base != 0.0 ? 100.0 * (x - base) / base : 0.0; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

CompareRow compare_row(const std::string& name, const SeasonMetrics& m) {
    return {name, m.total_irrigation, m.iwue, m.yield, m.violation_days, false, {}};
}

CompareTable compare(const std::vector<CompareRow>& rows, const std::string& baseline) {
    CompareTable t;
    t.baseline = baseline;
    t.rows = rows;
    const auto base = std::find_if(rows.begin(), rows.end(),
                                   [&](const CompareRow& r) { return !r.reference && r.name == baseline; });
    if (base == rows.end()) throw MissingArtifact("baseline '" + baseline + "' is not among the compared logs");
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const CompareRow* b = &*base;
        if (rows[k].reference) {
            const auto it = std::find_if(rows.begin(), rows.end(), [&](const CompareRow& r) {
                return r.reference && r.name == (rows[k].against.empty() ? rows[k].name : rows[k].against);
            });
            b = it == rows.end() ? &rows[k] : &*it;
        }
        t.irrigation_delta.push_back(pct(rows[k].total_irrigation, b->total_irrigation));
        t.iwue_delta.push_back(pct(rows[k].iwue, b->iwue));
    }
    return t;
}

std::string CompareTable::csv() const {
    std::string out = "variant,reference,total_irrigation_m,irrigation_delta_pct,iwue_kg_m3,iwue_delta_pct,yield_kg_m2,"
                      "violation_days\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        out += r.name + "," + (r.reference ? "1" : "0") + "," + fmt("%.6f", r.total_irrigation) + "," +
               fmt("%.3f", irrigation_delta[k]) + "," + fmt("%.6f", r.iwue) + "," + fmt("%.3f", iwue_delta[k]) + "," +
               (r.reference ? std::string() : fmt("%.6f", r.yield)) + "," +
               (r.reference ? std::string() : std::to_string(r.violation_days)) + "\n";
    }
    return out;
}

std::string CompareTable::text() const {
    char buf[256];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-24s %10s %8s %10s %8s %8s %6s\n", "variant", "irr (m)", "d%", "IWUE", "d%",
                  "yield", "viol");
    out += buf;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& r = rows[k];
        const std::string name = r.reference ? r.name + " (ref)" : r.name;
        if (r.reference) {
            std::snprintf(buf, sizeof buf, "%-24s %10.3f %+8.1f %10.3f %+8.1f %8s %6s\n", name.c_str(),
                          r.total_irrigation, irrigation_delta[k], r.iwue, iwue_delta[k], "-", "-");
        } else {
            std::snprintf(buf, sizeof buf, "%-24s %10.3f %+8.1f %10.3f %+8.1f %8.3f %6d\n", name.c_str(),
                          r.total_irrigation, irrigation_delta[k], r.iwue, iwue_delta[k], r.yield, r.violation_days);
        }
        out += buf;
    }
    out += "deltas against " + baseline + "\n";
    return out;
}

std::vector<CompareRow> reference_rows() {
    return {
        {"scmarl", 0.785, 1.118, 0.0, 0, true, "dmarl"},
        {"dmarl", 0.800, 1.097, 0.0, 0, true, "dmarl"},
        {"scmarl+mpc", 0.774, 1.134, 0.0, 0, true, "lb-ma-mpc"},
        {"lb-ma-mpc", 0.806, 1.067, 0.0, 0, true, "lb-ma-mpc"},
    };
}

}  // namespace irrig::harness

#include "pshex/report.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace pshex {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string CertRecord::to_json() const {
    nlohmann::json j;
    j["check"] = check;
    j["anchor"] = anchor;
    j["samples"] = samples;
    j["tolerance"] = tolerance;
    j["worst"] = worst;
    j["pass"] = pass;
    j["worst_at"] = worst_at;
    return j.dump();
}

std::vector<double> CertificationReport::numbers() const {
    std::vector<double> out;
    out.reserve(records.size() * 3);
    for (const auto& r : records) {
        out.push_back(static_cast<double>(r.samples));
        out.push_back(r.tolerance);
        out.push_back(r.worst);
    }
    return out;
}

std::string CertificationReport::summary() const {
    std::ostringstream oss;
    long fails = 0;
    for (const auto& r : records)
        if (!r.pass) ++fails;
    oss << "report: " << name << "  records: " << records.size()
        << "  failures: " << fails << "\n";
    for (const auto& [k, v] : header) oss << "  # " << k << " = " << v << "\n";
    for (const auto& r : records) {
        oss << (r.pass ? "  [pass] " : "  [FAIL] ") << r.check
            << "  anchor=" << r.anchor << "  samples=" << r.samples
            << "  tol=" << format_double(r.tolerance)
            << "  worst=" << format_double(r.worst);
        if (!r.worst_at.empty()) oss << "  at " << r.worst_at;
        oss << "\n";
    }
    return oss.str();
}

} // namespace pshex

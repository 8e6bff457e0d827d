#ifndef PSHEX_REPORT_HPP
#define PSHEX_REPORT_HPP

#include <map>
#include <string>
#include <vector>

namespace pshex {

/// One certified inequality: which check, how many samples, the tolerance it
/// was held to, the worst violation seen (<= 0 means the inequality held with
/// margin) and where the worst case sat.
struct CertRecord {
    std::string check;              // e.g. "psh.circle_mean"
    std::string anchor = "invented"; // stable id of the inequality under test
    long samples = 0;
    double tolerance = 0.0;
    double worst = 0.0;
    bool pass = false;
    std::string worst_at;

    std::string to_json() const;
};

struct CertificationReport {
    std::string name;
    std::map<std::string, std::string> header; // constants, provenance
    std::vector<CertRecord> records;

    bool all_pass() const {
        for (const auto& r : records)
            if (!r.pass) return false;
        return true;
    }
    void add(CertRecord r) { records.push_back(std::move(r)); }
    void merge(const CertificationReport& other) {
        for (const auto& r : other.records) records.push_back(r);
        for (const auto& [k, v] : other.header) header.emplace(k, v);
    }

    /// All numeric payloads in deterministic order (for bitwise replay checks).
    std::vector<double> numbers() const;

    std::string summary() const;
};

std::string format_double(double v);

} // namespace pshex

#endif

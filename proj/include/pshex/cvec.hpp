#ifndef PSHEX_CVEC_HPP
#define PSHEX_CVEC_HPP

#include <complex>
#include <cstddef>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pshex {

using cplx = std::complex<double>;

/// A point of the truncated sequence space: finitely many complex
/// coordinates, implicitly zero-padded up to the ambient truncation level.
class CVec {
public:
    CVec() = default;

    explicit CVec(int ambient_dim) : dim_(check_dim(ambient_dim)) {}

    CVec(std::vector<cplx> entries, int ambient_dim)
        : entries_(std::move(entries)), dim_(check_dim(ambient_dim)) {
        if (static_cast<int>(entries_.size()) > dim_)
            throw std::invalid_argument("CVec: more entries than ambient dimension");
    }

    static CVec axis(int j, int ambient_dim, cplx value = {1.0, 0.0}) {
        CVec v(ambient_dim);
        v.set(j, value);
        return v;
    }

    int dim() const { return dim_; }

    cplx operator[](int i) const {
        return i < static_cast<int>(entries_.size()) ? entries_[i] : cplx{0.0, 0.0};
    }

    void set(int i, cplx v) {
        if (i < 0 || i >= dim_) throw std::out_of_range("CVec::set: index out of range");
        if (i >= static_cast<int>(entries_.size())) entries_.resize(i + 1);
        entries_[i] = v;
    }

    double norm_sq() const {
        double s = 0.0;
        for (const auto& z : entries_) s += std::norm(z);
        return s;
    }

    double norm() const { return std::sqrt(norm_sq()); }

    /// Keep only the first n coordinates (ambient dimension unchanged).
    CVec head(int n) const {
        CVec v(dim_);
        const int m = std::min<int>(n, static_cast<int>(entries_.size()));
        v.entries_.assign(entries_.begin(), entries_.begin() + std::max(m, 0));
        return v;
    }

    CVec& operator+=(const CVec& o) {
        grow_to(o.entries_.size());
        for (std::size_t i = 0; i < o.entries_.size(); ++i) entries_[i] += o.entries_[i];
        return *this;
    }
    CVec& operator-=(const CVec& o) {
        grow_to(o.entries_.size());
        for (std::size_t i = 0; i < o.entries_.size(); ++i) entries_[i] -= o.entries_[i];
        return *this;
    }
    CVec& operator*=(cplx a) {
        for (auto& z : entries_) z *= a;
        return *this;
    }

    friend CVec operator+(CVec a, const CVec& b) { a += b; return a; }
    friend CVec operator-(CVec a, const CVec& b) { a -= b; return a; }
    friend CVec operator*(cplx a, CVec v) { v *= a; return v; }
    friend CVec operator*(CVec v, cplx a) { v *= a; return v; }

    /// Canonical inner product, conjugate-linear in the second argument.
    friend cplx inner(const CVec& a, const CVec& b) {
        cplx s{0.0, 0.0};
        const std::size_t m = std::min(a.entries_.size(), b.entries_.size());
        for (std::size_t i = 0; i < m; ++i) s += a.entries_[i] * std::conj(b.entries_[i]);
        return s;
    }

    friend double dist(const CVec& a, const CVec& b) {
        double s = 0.0;
        const std::size_t m = std::max(a.entries_.size(), b.entries_.size());
        for (std::size_t i = 0; i < m; ++i) s += std::norm(a[static_cast<int>(i)] - b[static_cast<int>(i)]);
        return std::sqrt(s);
    }

    /// Zero-padding is canonical: trailing zeros compare equal to absent entries.
    friend bool operator==(const CVec& a, const CVec& b) {
        const std::size_t m = std::max(a.entries_.size(), b.entries_.size());
        for (std::size_t i = 0; i < m; ++i)
            if (a[static_cast<int>(i)] != b[static_cast<int>(i)]) return false;
        return true;
    }

    std::string to_string() const;

private:
    static int check_dim(int n) {
        if (n <= 0) throw std::invalid_argument("CVec: ambient dimension must be positive");
        return n;
    }
    void grow_to(std::size_t n) {
        if (entries_.size() < n) entries_.resize(n);
    }

    std::vector<cplx> entries_;
    int dim_ = 1;
};

inline CVec normalized(const CVec& v) {
    const double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("normalized: zero vector");
    return v * cplx{1.0 / n, 0.0};
}

} // namespace pshex

#endif

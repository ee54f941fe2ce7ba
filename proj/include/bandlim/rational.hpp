#pragma once

#include <cstdint>
#include <compare>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bandlim {

/// Exact rational number with 64-bit numerator/denominator.
///
/// Distances in a Space are stored as rationals so that propagation and
/// ball-membership comparisons are exact. Grid metrics only ever produce
/// integers; explicit distance tables may carry decimal fractions.
class Rational {
public:
    constexpr Rational() : num_(0), den_(1) {}
    constexpr Rational(std::int64_t n) : num_(n), den_(1) {}

    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (den_ == 0) throw std::invalid_argument("Rational: zero denominator");
        normalize();
    }

    /// Parses "3", "-2.5", "7/4" exactly.
    static Rational parse(const std::string& s) {
        if (auto pos = s.find('/'); pos != std::string::npos) {
            return Rational(std::stoll(s.substr(0, pos)), std::stoll(s.substr(pos + 1)));
        }
        if (auto pos = s.find('.'); pos != std::string::npos) {
            std::string intpart = s.substr(0, pos);
            std::string frac = s.substr(pos + 1);
            if (frac.size() > 15) throw std::invalid_argument("Rational::parse: too many decimals");
            std::int64_t den = 1;
            for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
            bool neg = !intpart.empty() && intpart[0] == '-';
            std::int64_t ip = intpart.empty() || intpart == "-" ? 0 : std::stoll(intpart);
            std::int64_t fp = frac.empty() ? 0 : std::stoll(frac);
            std::int64_t num = ip * den + (neg ? -fp : fp);
            return Rational(num, den);
        }
        return Rational(std::stoll(s));
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        // denominators are positive after normalization
        return a.num_ * b.den_ <=> b.num_ * a.den_;
    }

    std::string str() const {
        if (den_ == 1) return std::to_string(num_);
        return std::to_string(num_) + "/" + std::to_string(den_);
    }

private:
    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    std::int64_t num_;
    std::int64_t den_;
};

} // namespace bandlim

#include "grraf/rational.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <stdexcept>

namespace grraf {

namespace {

__int128 gcd_wide(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

bool fits_int64(__int128 v) {
    return v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max();
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    *this = from_wide(num, den);
}

Rational Rational::from_wide(__int128 num, __int128 den) {
    if (den == 0) throw std::domain_error("division by zero");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    __int128 g = gcd_wide(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (!fits_int64(num) || !fits_int64(den)) throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(num);
    r.den_ = static_cast<std::int64_t>(den);
    return r;
}

std::int64_t Rational::floor() const noexcept {
    std::int64_t q = num_ / den_;
    if ((num_ % den_ != 0) && (num_ < 0)) --q;
    return q;
}

std::string Rational::to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

bool Rational::has_finite_decimal() const noexcept {
    std::int64_t d = den_;
    while (d % 2 == 0) d /= 2;
    while (d % 5 == 0) d /= 5;
    return d == 1;
}

std::optional<Rational> Rational::parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        auto lhs = parse(text.substr(0, slash));
        auto rhs = parse(text.substr(slash + 1));
        if (!lhs || !rhs || !lhs->is_integer() || !rhs->is_integer() || rhs->num() == 0) return std::nullopt;
        try {
            return Rational(lhs->num(), rhs->num());
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    std::size_t pos = 0;
    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') {
        negative = text[pos] == '-';
        ++pos;
    }
    __int128 mantissa = 0;
    int scale = 0;  // power of ten to divide by
    bool any_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            any_digit = true;
            mantissa = mantissa * 10 + (c - '0');
            if (mantissa > (static_cast<__int128>(1) << 100)) return std::nullopt;
            if (seen_point) ++scale;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) return std::nullopt;
    int exponent = 0;
    if (pos < text.size()) {
        if (text[pos] != 'e' && text[pos] != 'E') return std::nullopt;
        ++pos;
        auto rest = text.substr(pos);
        if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
        if (ec != std::errc() || ptr != rest.data() + rest.size()) return std::nullopt;
        if (exponent > 30 || exponent < -30) return std::nullopt;
    }
    scale -= exponent;
    __int128 num = negative ? -mantissa : mantissa;
    __int128 den = 1;
    try {
        while (scale > 0) {
            den *= 10;
            --scale;
            if (den > (static_cast<__int128>(1) << 100)) return std::nullopt;
        }
        while (scale < 0) {
            num *= 10;
            ++scale;
            if (num > (static_cast<__int128>(1) << 100) || num < -(static_cast<__int128>(1) << 100))
                return std::nullopt;
        }
        return from_wide(num, den);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

Rational Rational::operator-() const {
    return from_wide(-static_cast<__int128>(num_), den_);
}

Rational& Rational::operator+=(const Rational& rhs) {
    __int128 n = static_cast<__int128>(num_) * rhs.den_ + static_cast<__int128>(rhs.num_) * den_;
    __int128 d = static_cast<__int128>(den_) * rhs.den_;
    return *this = from_wide(n, d);
}

Rational& Rational::operator-=(const Rational& rhs) {
    return *this += -rhs;
}

Rational& Rational::operator*=(const Rational& rhs) {
    __int128 n = static_cast<__int128>(num_) * rhs.num_;
    __int128 d = static_cast<__int128>(den_) * rhs.den_;
    return *this = from_wide(n, d);
}

Rational& Rational::operator/=(const Rational& rhs) {
    if (rhs.num_ == 0) throw std::domain_error("division by zero");
    __int128 n = static_cast<__int128>(num_) * rhs.den_;
    __int128 d = static_cast<__int128>(den_) * rhs.num_;
    return *this = from_wide(n, d);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace grraf

#include "psjs/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace psjs {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

Rational pow10(long e) {
    mpz_class p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
    Rational r = e < 0 ? Rational(1, p) : Rational(p);
    r.canonicalize();
    return r;
}

} // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = text;
    auto bad = [&]() { return std::invalid_argument("malformed number '" + std::string(text) + "'"); };
    bool negative = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        negative = s[0] == '-';
        s.remove_prefix(1);
    }
    Rational out;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash), den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) throw bad();
        mpz_class d{std::string(den), 10};
        if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        out = Rational(mpz_class(std::string(num), 10), d);
        out.canonicalize();
    } else {
        long exponent = 0;
        if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
            auto exp_text = s.substr(e + 1);
            bool exp_neg = false;
            if (!exp_text.empty() && (exp_text[0] == '-' || exp_text[0] == '+')) {
                exp_neg = exp_text[0] == '-';
                exp_text.remove_prefix(1);
            }
            if (!all_digits(exp_text) || exp_text.size() > 6) throw bad();
            exponent = std::stol(std::string(exp_text));
            if (exp_neg) exponent = -exponent;
            s = s.substr(0, e);
        }
        std::string_view whole = s, frac;
        if (auto dot = s.find('.'); dot != std::string_view::npos) {
            whole = s.substr(0, dot);
            frac = s.substr(dot + 1);
        }
        if (whole.empty() && frac.empty()) throw bad();
        if (!whole.empty() && !all_digits(whole)) throw bad();
        if (!frac.empty() && !all_digits(frac)) throw bad();
        std::string digits = std::string(whole) + std::string(frac);
        out = Rational(mpz_class(digits.empty() ? "0" : digits, 10));
        out *= pow10(exponent - static_cast<long>(frac.size()));
        out.canonicalize();
    }
    if (negative) out = -out;
    return out;
}

std::string to_fraction_string(const Rational& r) {
    Rational c = r;
    c.canonicalize();
    return c.get_num().get_str() + "/" + c.get_den().get_str();
}

Rational rational_from_double(double x) {
    Rational r(x);
    r.canonicalize();
    return r;
}

} // namespace psjs

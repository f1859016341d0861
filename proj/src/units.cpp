#include "fbcool/units.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>

#include "fbcool/constants.hpp"
#include "fbcool/errors.hpp"

namespace fbcool::units {

namespace {

// Scale = 10^exp10 * factor; decimal scales are kept exact so that "12 ng"
// and "1.2e-11 kg" parse to the same double.
struct UnitDef {
    std::string_view name;
    int exp10;
    double factor;
    Dimension dim;
};

constexpr std::array<UnitDef, 15> unit_table{{
    {"m", 0, 1.0, length},
    {"g", -3, 1.0, mass},
    {"s", 0, 1.0, time},
    {"K", 0, 1.0, temperature},
    {"W", 0, 1.0, power},
    {"Pa", 0, 1.0, pressure},
    {"Hz", 0, 1.0, frequency},
    {"N", 0, 1.0, force},
    {"J", 0, 1.0, Dimension{4, 2, -4, 0}},
    {"rtHz", 0, 1.0, Dimension{0, 0, -1, 0}},
    {"rad", 0, 1.0, dimensionless},
    {"deg", 0, pi / 180.0, dimensionless},
    {"ppm", -6, 1.0, dimensionless},
    {"%", -2, 1.0, dimensionless},
    {"1", 0, 1.0, dimensionless},
}};

struct Prefix {
    std::string_view text;
    int exp10;
};

constexpr std::array<Prefix, 16> prefix_table{{
    {"y", -24}, {"z", -21}, {"a", -18}, {"f", -15}, {"p", -12}, {"n", -9},
    {"u", -6}, {"\xC2\xB5", -6}, {"\xCE\xBC", -6}, {"m", -3}, {"c", -2}, {"k", 3},
    {"M", 6}, {"G", 9}, {"T", 12}, {"d", -1},
}};

std::optional<UnitDef> lookup(std::string_view id) {
    for (const auto& u : unit_table)
        if (u.name == id) return u;
    for (const auto& p : prefix_table) {
        if (id.size() > p.text.size() && id.substr(0, p.text.size()) == p.text) {
            const std::string_view rest = id.substr(p.text.size());
            for (const auto& u : unit_table) {
                // Prefixed dimensionless markers (e.g. "k%") make no sense.
                if (u.name == rest && u.name != "%" && u.name != "ppm" && u.name != "1")
                    return UnitDef{id, p.exp10 + u.exp10, u.factor, u.dim};
            }
        }
    }
    return std::nullopt;
}

struct Parsed {
    int exp10 = 0;
    double factor = 1.0;
    Dimension dim{};
};

class UnitParser {
public:
    explicit UnitParser(std::string_view s) : s_(s) {}

    Parsed parse() {
        Parsed p = expr();
        skip_space();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(s_.substr(pos_)) + "'");
        return p;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw DomainError("bad unit '" + std::string(s_) + "': " + msg);
    }

    void skip_space() {
        while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
    }

    bool at_middle_dot() const { return s_.substr(pos_, 2) == "\xC2\xB7"; }

    static bool ident_char(unsigned char c) {
        return std::isalpha(c) || c == '%' || c >= 0x80 || c == '1';
    }

    Parsed expr() {
        Parsed acc = term();
        for (;;) {
            skip_space();
            if (pos_ >= s_.size() || s_[pos_] == ')') return acc;
            bool divide = false;
            if (s_[pos_] == '/') {
                divide = true;
                ++pos_;
            } else if (s_[pos_] == '*') {
                ++pos_;
            } else if (at_middle_dot()) {
                pos_ += 2;
            }
            skip_space();
            Parsed t = term();
            if (divide) {
                acc.exp10 -= t.exp10;
                acc.factor /= t.factor;
                acc.dim += t.dim.scaled(-1);
            } else {
                acc.exp10 += t.exp10;
                acc.factor *= t.factor;
                acc.dim += t.dim;
            }
        }
    }

    Parsed term() {
        Parsed a = atom();
        skip_space();
        if (pos_ < s_.size() && s_[pos_] == '^') {
            ++pos_;
            int e = 0;
            const auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), e);
            if (r.ec != std::errc{}) fail("expected an integer exponent");
            pos_ = static_cast<std::size_t>(r.ptr - s_.data());
            a.exp10 *= e;
            a.factor = std::pow(a.factor, e);
            a.dim = a.dim.scaled(e);
        }
        return a;
    }

    Parsed atom() {
        skip_space();
        if (pos_ >= s_.size()) fail("missing unit");
        if (s_[pos_] == '(') {
            ++pos_;
            Parsed p = expr();
            if (pos_ >= s_.size() || s_[pos_] != ')') fail("missing ')'");
            ++pos_;
            return p;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && ident_char(static_cast<unsigned char>(s_[pos_])) && !at_middle_dot()) ++pos_;
        const std::string_view id = s_.substr(start, pos_ - start);
        if (id.empty()) fail("expected a unit name");
        const auto u = lookup(id);
        if (!u) fail("unknown unit '" + std::string(id) + "'");
        return Parsed{u->exp10, u->factor, u->dim};
    }
};

}  // namespace

std::string describe(const Dimension& d) {
    if (d == dimensionless) return "dimensionless";
    std::string out;
    auto part = [&](int twice, const char* sym) {
        if (twice == 0) return;
        if (!out.empty()) out += " ";
        out += sym;
        if (twice != 2) {
            out += "^";
            out += twice % 2 == 0 ? std::to_string(twice / 2) : std::to_string(twice) + "/2";
        }
    };
    part(d.m, "m");
    part(d.kg, "kg");
    part(d.s, "s");
    part(d.K, "K");
    return out;
}

Quantity parse_quantity(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    text = text.substr(b, e - b);
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc{} || !std::isfinite(v))
        throw DomainError("expected '<number> <unit>', got '" + std::string(text) + "'");
    const std::string_view rest = text.substr(static_cast<std::size_t>(r.ptr - text.data()));
    bool blank = true;
    for (char c : rest) blank = blank && c == ' ';
    if (blank) return Quantity{v, dimensionless};
    const Parsed p = UnitParser(rest).parse();
    if (p.exp10 != 0) {
        // Shift the decimal exponent textually and let from_chars round once.
        const std::string_view number = text.substr(0, static_cast<std::size_t>(r.ptr - text.data()));
        std::string mantissa(number);
        int exp = p.exp10;
        if (const auto epos = mantissa.find_first_of("eE"); epos != std::string::npos) {
            int e0 = 0;
            std::from_chars(mantissa.data() + epos + 1, mantissa.data() + mantissa.size(), e0);
            exp += e0;
            mantissa.resize(epos);
        }
        mantissa += "e" + std::to_string(exp);
        std::from_chars(mantissa.data(), mantissa.data() + mantissa.size(), v);
    }
    return Quantity{p.factor == 1.0 ? v : v * p.factor, p.dim};
}

double parse_as(std::string_view text, const Dimension& expected, std::string_view field) {
    Quantity q{};
    try {
        q = parse_quantity(text);
    } catch (const DomainError& e) {
        throw DomainError(std::string(field) + ": " + e.what());
    }
    if (!(q.dim == expected)) {
        throw DomainError(std::string(field) + ": expected " + describe(expected) + ", got '" + std::string(text) +
                          "' (" + describe(q.dim) + ")");
    }
    return q.value;
}

}  // namespace fbcool::units

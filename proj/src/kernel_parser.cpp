#include "gpreg/kernel_parser.hpp"

#include "gpreg/errors.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <system_error>

namespace gpreg {

namespace {

enum class ValueKind { Real, Integer, Word };

struct ParamSpec {
    const char* name;
    const char* alias;
    ValueKind kind;
    double lo;
    bool lo_open;
    double hi;
    std::optional<double> fallback; // nullopt: required
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const ParamSpec kEll{"ell", "lengthscale", ValueKind::Real, 0.0, true, kInf, 1.0};
const ParamSpec kDim{"dim", nullptr, ValueKind::Integer, 1.0, false, 16.0, 1.0};

struct Value {
    double number = 0.0;
    std::string word;
    std::size_t offset = 0;
};

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    [[noreturn]] void fail(ParseErrorKind kind, std::size_t at, const std::string& message) const {
        throw ParseError(kind, at, message);
    }

    void skip_space() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    }

    bool at_end() {
        skip_space();
        return pos >= text.size();
    }

    char peek() {
        skip_space();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos >= text.size()) {
                fail(ParseErrorKind::Syntax, pos, std::string("expected '") + c + "' but reached end of input");
            }
            fail(ParseErrorKind::Syntax, pos,
                 std::string("expected '") + c + "' but found '" + text[pos] + "'");
        }
    }

    bool starts_number() {
        const char c = peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return true;
        }
        if ((c == '-' || c == '+') && pos + 1 < text.size()) {
            const char n = text[pos + 1];
            return std::isdigit(static_cast<unsigned char>(n)) || n == '.';
        }
        return false;
    }

    double number() {
        skip_space();
        const std::size_t start = pos;
        const char* first = text.data() + pos;
        const char* last = text.data() + text.size();
        if (first != last && *first == '+') {
            ++first;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || !std::isfinite(v)) {
            fail(ParseErrorKind::Syntax, start, "malformed number");
        }
        pos = static_cast<std::size_t>(ptr - text.data());
        return v;
    }

    std::string identifier() {
        skip_space();
        const std::size_t start = pos;
        while (pos < text.size()
               && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) {
            ++pos;
        }
        if (pos == start || std::isdigit(static_cast<unsigned char>(text[start]))) {
            if (pos >= text.size()) {
                fail(ParseErrorKind::Syntax, start, "expected a name but reached end of input");
            }
            fail(ParseErrorKind::Syntax, start, std::string("expected a name but found '") + text[start] + "'");
        }
        return std::string(text.substr(start, pos - start));
    }

    // '(' already consumed; reads kwargs and the closing ')'.
    std::map<std::string, Value> kwargs() {
        std::map<std::string, Value> out;
        if (accept(')')) {
            return out;
        }
        do {
            skip_space();
            const std::size_t key_at = pos;
            std::string key = identifier();
            expect('=');
            skip_space();
            Value v;
            v.offset = pos;
            if (starts_number()) {
                v.number = number();
            } else {
                v.word = identifier();
            }
            if (out.contains(key)) {
                fail(ParseErrorKind::Semantic, key_at, "duplicate parameter '" + key + "'");
            }
            out.emplace(std::move(key), std::move(v));
        } while (accept(','));
        expect(')');
        return out;
    }

    // Resolves one parameter from kwargs (removing it), validating type and range.
    double take(std::map<std::string, Value>& args, const ParamSpec& spec, const std::string& call,
                std::size_t call_at) {
        auto it = args.find(spec.name);
        if (it == args.end() && spec.alias) {
            it = args.find(spec.alias);
        }
        if (it == args.end()) {
            if (!spec.fallback) {
                fail(ParseErrorKind::Semantic, call_at,
                     call + ": missing required parameter '" + spec.name + "'");
            }
            return *spec.fallback;
        }
        const Value v = it->second;
        args.erase(it);
        if (!v.word.empty()) {
            fail(ParseErrorKind::ParameterRange, v.offset,
                 call + ": parameter '" + spec.name + "' must be numeric, got '" + v.word + "'");
        }
        const bool below = spec.lo_open ? !(v.number > spec.lo) : !(v.number >= spec.lo);
        const bool integer_bad = spec.kind == ValueKind::Integer && v.number != std::floor(v.number);
        if (below || v.number > spec.hi || integer_bad) {
            std::string range = std::string(spec.lo_open ? "(" : "[") + format_number(spec.lo) + ", "
                + (std::isinf(spec.hi) ? std::string("inf)") : format_number(spec.hi) + "]");
            if (spec.kind == ValueKind::Integer) {
                range = "an integer in " + range;
            }
            fail(ParseErrorKind::ParameterRange, v.offset,
                 call + ": parameter '" + spec.name + "' must be " + range + ", got " + format_number(v.number));
        }
        return v.number;
    }

    std::string take_word(std::map<std::string, Value>& args, const char* name, const std::string& call,
                          std::size_t call_at) {
        auto it = args.find(name);
        if (it == args.end()) {
            fail(ParseErrorKind::Semantic, call_at, call + ": missing required parameter '" + name + "'");
        }
        const Value v = it->second;
        args.erase(it);
        if (v.word.empty()) {
            fail(ParseErrorKind::ParameterRange, v.offset,
                 call + ": parameter '" + std::string(name) + "' must be a name");
        }
        return v.word;
    }

    void no_leftovers(const std::map<std::string, Value>& args, const std::string& call) const {
        if (!args.empty()) {
            const auto& [key, value] = *args.begin();
            // Report at the key: the value offset minus "key=" is not reliable with spaces,
            // so search backwards for the key text.
            std::size_t at = text.rfind(key, value.offset);
            if (at == std::string_view::npos) {
                at = value.offset;
            }
            fail(ParseErrorKind::UnknownParameter, at, call + ": unknown parameter '" + key + "'");
        }
    }

    KernelExpr leaf(const std::string& name, std::size_t at) {
        static const std::set<std::string> kLeaves = {"matern", "wendland", "se",   "rq",     "periodic",
                                                      "wiener", "linear",   "poly", "feature"};
        if (!kLeaves.contains(name)) {
            fail(ParseErrorKind::UnknownName, at, "unknown kernel name '" + name + "'");
        }
        auto args = kwargs();
        auto take_here = [&](const ParamSpec& spec) { return take(args, spec, name, at); };
        auto as_int = [](double v) { return static_cast<int>(v); };
        std::optional<KernelExpr> out;
        if (name == "matern") {
            const double nu = take_here({"nu", nullptr, ValueKind::Real, 0.0, true, 100.0, std::nullopt});
            const double ell = take_here(kEll);
            const int dim = as_int(take_here(kDim));
            no_leftovers(args, name);
            out = KernelExpr::matern(nu, ell, dim);
        } else if (name == "wendland") {
            const int d = as_int(take_here({"d", nullptr, ValueKind::Integer, 1.0, false, 16.0, std::nullopt}));
            const int n = as_int(take_here({"n", nullptr, ValueKind::Integer, 0.0, false, 10.0, std::nullopt}));
            const double ell = take_here(kEll);
            const int dim = as_int(
                take_here({"dim", nullptr, ValueKind::Integer, 1.0, false, static_cast<double>(d), double(d)}));
            no_leftovers(args, name);
            out = KernelExpr::wendland(d, n, ell, dim);
        } else if (name == "se") {
            const double ell = take_here(kEll);
            const int dim = as_int(take_here(kDim));
            no_leftovers(args, name);
            out = KernelExpr::squared_exponential(ell, dim);
        } else if (name == "rq") {
            const double a = take_here({"a", nullptr, ValueKind::Real, 0.0, true, kInf, 1.0});
            const double ell = take_here(kEll);
            const int dim = as_int(take_here(kDim));
            no_leftovers(args, name);
            out = KernelExpr::rational_quadratic(a, ell, dim);
        } else if (name == "periodic") {
            const double ell = take_here(kEll);
            no_leftovers(args, name);
            out = KernelExpr::periodic(ell);
        } else if (name == "wiener") {
            no_leftovers(args, name);
            out = KernelExpr::wiener();
        } else if (name == "linear") {
            const int dim = as_int(take_here(kDim));
            no_leftovers(args, name);
            out = KernelExpr::linear(dim);
        } else if (name == "poly") {
            const int m = as_int(take_here({"m", nullptr, ValueKind::Integer, 1.0, false, 50.0, std::nullopt}));
            const int dim = as_int(take_here(kDim));
            no_leftovers(args, name);
            out = KernelExpr::polynomial(m, dim);
        } else if (name == "feature") {
            const auto family_at = args.contains("family") ? args.at("family").offset : at;
            const std::string family = take_word(args, "family", name, at);
            const int m = as_int(take_here({"m", nullptr, ValueKind::Integer, 1.0, false, 50.0, std::nullopt}));
            no_leftovers(args, name);
            if (family == "monomial") {
                out = KernelExpr::feature_monomial(m);
            } else if (family == "trig") {
                out = KernelExpr::feature_trigonometric(m);
            } else {
                fail(ParseErrorKind::ParameterRange, family_at,
                     "feature: family must be 'monomial' or 'trig', got '" + family + "'");
            }
        } else {
            fail(ParseErrorKind::UnknownName, at, "unknown kernel name '" + name + "'");
        }
        return *out;
    }

    KernelExpr warp(std::size_t at) {
        KernelExpr child = expr();
        expect(',');
        skip_space();
        const std::size_t name_at = pos;
        const std::string name = identifier();
        std::map<std::string, Value> args;
        if (accept('(')) {
            args = kwargs();
        }
        expect(')');
        if (name == "affine") {
            const double a = take(args, {"a", nullptr, ValueKind::Real, -kInf, false, kInf, 1.0}, name, name_at);
            const double b = take(args, {"b", nullptr, ValueKind::Real, -kInf, false, kInf, 0.0}, name, name_at);
            no_leftovers(args, name);
            if (a == 0.0) {
                fail(ParseErrorKind::ParameterRange, at, "affine: parameter 'a' must be nonzero");
            }
            return KernelExpr::warp_affine(std::move(child), a, b);
        }
        if (name == "abs_power") {
            const double beta =
                take(args, {"beta", nullptr, ValueKind::Real, 0.0, true, 1.0, std::nullopt}, name, name_at);
            no_leftovers(args, name);
            return KernelExpr::warp_abs_power(std::move(child), beta);
        }
        fail(ParseErrorKind::UnknownName, name_at, "unknown warp family '" + name + "'");
    }

    KernelExpr call() {
        skip_space();
        const std::size_t at = pos;
        const std::string name = identifier();
        expect('(');
        try {
            if (name == "tensor") {
                std::vector<KernelExpr> factors{expr()};
                while (accept(',')) {
                    factors.push_back(expr());
                }
                expect(')');
                if (factors.size() < 2) {
                    fail(ParseErrorKind::Syntax, at, "tensor needs at least two factors");
                }
                return KernelExpr::tensor(std::move(factors));
            }
            if (name == "warp") {
                return warp(at);
            }
            return leaf(name, at);
        } catch (const DimensionError& e) {
            fail(ParseErrorKind::Semantic, at, e.what());
        } catch (const DomainError& e) {
            fail(ParseErrorKind::ParameterRange, at, e.what());
        }
    }

    // Returns the factor, or nullopt with *weight updated for a numeric factor.
    std::optional<KernelExpr> factor(double& weight) {
        skip_space();
        if (starts_number()) {
            const std::size_t at = pos;
            const double v = number();
            if (!(v > 0.0)) {
                fail(ParseErrorKind::ParameterRange, at, "conic weight must be positive, got " + format_number(v));
            }
            weight *= v;
            return std::nullopt;
        }
        if (accept('(')) {
            KernelExpr inner = expr();
            expect(')');
            return inner;
        }
        if (pos >= text.size()) {
            fail(ParseErrorKind::Syntax, pos, "expected a kernel but reached end of input");
        }
        if (!std::isalpha(static_cast<unsigned char>(text[pos])) && text[pos] != '_') {
            fail(ParseErrorKind::Syntax, pos, std::string("expected a kernel but found '") + text[pos] + "'");
        }
        return call();
    }

    struct Term {
        KernelExpr kernel;
        double weight;
        bool weighted;
    };

    Term term() {
        skip_space();
        const std::size_t at = pos;
        double weight = 1.0;
        bool weighted = false;
        std::vector<KernelExpr> kernels;
        do {
            if (auto f = factor(weight)) {
                kernels.push_back(std::move(*f));
            } else {
                weighted = true;
            }
        } while (accept('*'));
        if (kernels.empty()) {
            fail(ParseErrorKind::Semantic, at, "term has a weight but no kernel");
        }
        if (!std::isfinite(weight)) {
            fail(ParseErrorKind::ParameterRange, at, "conic weight overflows");
        }
        try {
            KernelExpr k = kernels.size() == 1 ? std::move(kernels.front()) : KernelExpr::product(std::move(kernels));
            return {std::move(k), weight, weighted};
        } catch (const DimensionError& e) {
            fail(ParseErrorKind::Semantic, at, e.what());
        }
    }

    KernelExpr expr() {
        skip_space();
        const std::size_t at = pos;
        std::vector<Term> terms{term()};
        while (accept('+')) {
            terms.push_back(term());
        }
        if (terms.size() == 1 && !terms.front().weighted) {
            return terms.front().kernel;
        }
        std::vector<KernelExpr> children;
        std::vector<double> weights;
        for (auto& t : terms) {
            children.push_back(std::move(t.kernel));
            weights.push_back(t.weight);
        }
        try {
            return KernelExpr::conic(std::move(children), std::move(weights));
        } catch (const DimensionError& e) {
            fail(ParseErrorKind::Semantic, at, e.what());
        }
    }
};

std::string join_args(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out += (i ? "," : "") + parts[i];
    }
    return out;
}

std::string kv(const char* key, double v) {
    return std::string(key) + "=" + format_number(v);
}

std::string print_node(const KernelExpr& e);

std::string print_in_product(const KernelExpr& e) {
    if (e.as<Conic>() || e.as<Product>()) {
        return "(" + print_node(e) + ")";
    }
    return print_node(e);
}

std::string print_node(const KernelExpr& e) {
    if (const auto* m = e.as<Matern>()) {
        std::vector<std::string> a{kv("nu", m->nu)};
        if (m->lengthscale != 1.0) a.push_back(kv("ell", m->lengthscale));
        if (m->dim != 1) a.push_back(kv("dim", m->dim));
        return "matern(" + join_args(a) + ")";
    }
    if (const auto* w = e.as<Wendland>()) {
        std::vector<std::string> a{kv("d", w->d), kv("n", w->n)};
        if (w->lengthscale != 1.0) a.push_back(kv("ell", w->lengthscale));
        if (w->dim != w->d) a.push_back(kv("dim", w->dim));
        return "wendland(" + join_args(a) + ")";
    }
    if (const auto* s = e.as<SquaredExponential>()) {
        std::vector<std::string> a;
        if (s->lengthscale != 1.0) a.push_back(kv("ell", s->lengthscale));
        if (s->dim != 1) a.push_back(kv("dim", s->dim));
        return "se(" + join_args(a) + ")";
    }
    if (const auto* q = e.as<RationalQuadratic>()) {
        std::vector<std::string> a;
        if (q->a != 1.0) a.push_back(kv("a", q->a));
        if (q->lengthscale != 1.0) a.push_back(kv("ell", q->lengthscale));
        if (q->dim != 1) a.push_back(kv("dim", q->dim));
        return "rq(" + join_args(a) + ")";
    }
    if (const auto* p = e.as<Periodic>()) {
        return p->lengthscale != 1.0 ? "periodic(" + kv("ell", p->lengthscale) + ")" : "periodic()";
    }
    if (e.as<Wiener>()) {
        return "wiener()";
    }
    if (const auto* l = e.as<Linear>()) {
        return l->dim != 1 ? "linear(" + kv("dim", l->dim) + ")" : "linear()";
    }
    if (const auto* p = e.as<Polynomial>()) {
        std::vector<std::string> a{kv("m", p->degree)};
        if (p->dim != 1) a.push_back(kv("dim", p->dim));
        return "poly(" + join_args(a) + ")";
    }
    if (const auto* f = e.as<Feature>()) {
        return std::string("feature(family=") + (f->family == FeatureFamily::Monomial ? "monomial" : "trig")
            + "," + kv("m", f->degree) + ")";
    }
    if (const auto* c = e.as<Conic>()) {
        std::string out;
        const bool single = c->children.size() == 1;
        for (std::size_t i = 0; i < c->children.size(); ++i) {
            if (i) out += " + ";
            const auto& child = c->children[i];
            if (single || c->weights[i] != 1.0) {
                out += format_number(c->weights[i]) + "*" + (child.as<Conic>() ? "(" + print_node(child) + ")"
                                                                                : print_node(child));
            } else {
                out += child.as<Conic>() ? "(" + print_node(child) + ")" : print_node(child);
            }
        }
        return out;
    }
    if (const auto* p = e.as<Product>()) {
        std::string out;
        for (std::size_t i = 0; i < p->children.size(); ++i) {
            out += (i ? "*" : "") + print_in_product(p->children[i]);
        }
        return out;
    }
    if (const auto* t = e.as<TensorProduct>()) {
        std::string out = "tensor(";
        for (std::size_t i = 0; i < t->children.size(); ++i) {
            out += (i ? ", " : "") + print_node(t->children[i]);
        }
        return out + ")";
    }
    const auto& w = *e.as<Warp>();
    if (w.warp.family == WarpFamily::Affine) {
        std::vector<std::string> a;
        if (w.warp.scale != 1.0) a.push_back(kv("a", w.warp.scale));
        if (w.warp.shift != 0.0) a.push_back(kv("b", w.warp.shift));
        return "warp(" + print_node(w.child) + ", affine(" + join_args(a) + "))";
    }
    return "warp(" + print_node(w.child) + ", abs_power(" + kv("beta", w.warp.beta) + "))";
}

} // namespace

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        return std::to_string(v);
    }
    return std::string(buf.data(), ptr);
}

KernelExpr parse_kernel(std::string_view text) {
    Parser p{text};
    if (p.at_end()) {
        throw ParseError(ParseErrorKind::Syntax, 0, "empty kernel expression");
    }
    KernelExpr out = p.expr();
    if (!p.at_end()) {
        p.fail(ParseErrorKind::Syntax, p.pos, std::string("unexpected '") + text[p.pos] + "'");
    }
    return out;
}

std::string print_kernel(const KernelExpr& e) {
    return print_node(e);
}

} // namespace gpreg

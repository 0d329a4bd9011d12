#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"
#include "overdet/system.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace overdet {

namespace {

struct Pos {
    int line;
    int column;
};

/// One statement, possibly joined from several physical lines.
struct Logical {
    std::string text;
    std::vector<Pos> pos;  // one entry per character, plus one past the end

    [[nodiscard]] Pos at(std::size_t i) const { return pos[std::min(i, pos.size() - 1)]; }
};

bool continues(const std::string& s)
{
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
    }
    if (depth > 0) return true;
    const auto last = s.find_last_not_of(" \t\r");
    if (last == std::string::npos) return false;
    return std::string("+-*/^=,").find(s[last]) != std::string::npos;
}

std::vector<Logical> split_lines(const std::string& source)
{
    std::vector<Logical> out;
    std::istringstream in(source);
    std::string raw;
    int line_no = 0;
    Logical cur;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const bool blank = raw.find_first_not_of(" \t") == std::string::npos;
        if (blank && cur.text.empty()) continue;
        if (!cur.text.empty()) {
            cur.text += ' ';
            cur.pos.push_back({line_no, 0});
        }
        for (std::size_t i = 0; i < raw.size(); ++i) {
            cur.text += raw[i];
            cur.pos.push_back({line_no, static_cast<int>(i) + 1});
        }
        if (!continues(cur.text)) {
            cur.pos.push_back({line_no, static_cast<int>(raw.size()) + 1});
            out.push_back(std::move(cur));
            cur = Logical{};
        }
    }
    if (!cur.text.empty()) {
        cur.pos.push_back({line_no, static_cast<int>(raw.size()) + 1});
        out.push_back(std::move(cur));
    }
    return out;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

const std::set<std::string>& keywords()
{
    static const std::set<std::string> k = {"name", "title", "coords", "time", "normal", "tangent", "param",
                                            "field", "aux", "let", "eq", "over", "rel", "normal_form"};
    return k;
}

class Cursor {
public:
    Cursor(const Logical& l, std::size_t start) : l_(l), i_(start) {}

    [[noreturn]] void fail(const std::string& msg) const { fail_at(i_, msg); }
    [[noreturn]] void fail_at(std::size_t i, const std::string& msg) const
    {
        const Pos p = l_.at(i);
        throw ParseError(msg, p.line, p.column);
    }

    void skip_ws()
    {
        while (i_ < l_.text.size() && std::isspace(static_cast<unsigned char>(l_.text[i_]))) ++i_;
    }
    [[nodiscard]] bool done()
    {
        skip_ws();
        return i_ >= l_.text.size();
    }
    char peek()
    {
        skip_ws();
        return i_ < l_.text.size() ? l_.text[i_] : '\0';
    }
    bool accept(char c)
    {
        if (peek() != c) return false;
        ++i_;
        return true;
    }
    void expect(char c)
    {
        if (!accept(c)) {
            if (done()) fail(std::string("expected '") + c + "' before end of line");
            fail(std::string("expected '") + c + "', found '" + l_.text[i_] + "'");
        }
    }
    std::string ident()
    {
        skip_ws();
        if (i_ >= l_.text.size() || !ident_start(l_.text[i_])) fail("expected identifier");
        const std::size_t s = i_;
        while (i_ < l_.text.size() && ident_char(l_.text[i_])) ++i_;
        return l_.text.substr(s, i_ - s);
    }
    [[nodiscard]] bool at_ident()
    {
        skip_ws();
        return i_ < l_.text.size() && ident_start(l_.text[i_]);
    }
    Rational number()
    {
        skip_ws();
        const std::size_t s = i_;
        mpz_class mant = 0;
        int scale = 0;
        bool digits = false;
        while (i_ < l_.text.size() && std::isdigit(static_cast<unsigned char>(l_.text[i_]))) {
            mant = mant * 10 + (l_.text[i_++] - '0');
            digits = true;
        }
        if (i_ < l_.text.size() && l_.text[i_] == '.') {
            ++i_;
            while (i_ < l_.text.size() && std::isdigit(static_cast<unsigned char>(l_.text[i_]))) {
                mant = mant * 10 + (l_.text[i_++] - '0');
                --scale;
                digits = true;
            }
        }
        if (!digits) fail_at(s, "malformed number");
        if (i_ < l_.text.size() && (l_.text[i_] == 'e' || l_.text[i_] == 'E')) {
            std::size_t j = i_ + 1;
            int sign = 1;
            if (j < l_.text.size() && (l_.text[j] == '+' || l_.text[j] == '-')) {
                sign = l_.text[j] == '-' ? -1 : 1;
                ++j;
            }
            if (j < l_.text.size() && std::isdigit(static_cast<unsigned char>(l_.text[j]))) {
                int e = 0;
                while (j < l_.text.size() && std::isdigit(static_cast<unsigned char>(l_.text[j]))) {
                    e = e * 10 + (l_.text[j++] - '0');
                }
                scale += sign * e;
                i_ = j;
            }
        }
        mpz_class ten = 1;
        mpz_ui_pow_ui(ten.get_mpz_t(), 10, static_cast<unsigned long>(std::abs(scale)));
        Rational r = scale >= 0 ? Rational(mant * ten) : Rational(mant, ten);
        r.canonicalize();
        return r;
    }
    [[nodiscard]] std::size_t index() const { return i_; }
    void set_index(std::size_t i) { i_ = i; }
    [[nodiscard]] std::string rest() const { return l_.text.substr(std::min(i_, l_.text.size())); }

private:
    const Logical& l_;
    std::size_t i_;
};

/// Symbol resolution against declarations made so far.
class Scope {
public:
    explicit Scope(PdeSystem& sys) : sys_(sys) {}

    PdeSystem& sys() { return sys_; }
    const Dependencies& deps() const { return deps_; }
    void refresh() { deps_ = sys_.dependencies(); }

    bool is_coord(const std::string& s) const { return sys_.frame.has(s); }
    bool is_param(const std::string& s) const
    {
        return std::find(sys_.params.begin(), sys_.params.end(), s) != sys_.params.end();
    }
    bool is_field(const std::string& s) const { return sys_.field(s) != nullptr; }
    bool declared(const std::string& s) const { return is_coord(s) || is_param(s) || is_field(s); }

private:
    PdeSystem& sys_;
    Dependencies deps_;
};

class ExprParser {
public:
    ExprParser(Cursor& c, const Scope& scope) : c_(c), scope_(scope) {}

    Expression parse()
    {
        Expression e = expr();
        return e;
    }

    Expression expr()
    {
        std::vector<Expression> terms{term()};
        while (true) {
            if (c_.accept('+')) {
                terms.push_back(term());
            } else if (c_.accept('-')) {
                terms.push_back(-term());
            } else {
                break;
            }
        }
        return terms.size() == 1 ? terms.front() : Expression::sum(std::move(terms));
    }

private:
    Expression term()
    {
        Expression acc = unary();
        while (true) {
            if (c_.accept('*')) {
                acc = acc * unary();
            } else if (c_.peek() == '/') {
                const std::size_t at = c_.index();
                c_.accept('/');
                Expression den = unary();
                if (den.is_zero()) c_.fail_at(at, "division by zero");
                acc = acc / den;
            } else {
                break;
            }
        }
        return acc;
    }

    Expression unary()
    {
        if (c_.accept('-')) return -unary();
        if (c_.accept('+')) return unary();
        return power();
    }

    Expression power()
    {
        Expression base = primary();
        if (c_.accept('^')) {
            const bool paren = c_.accept('(');
            const bool neg = c_.accept('-');
            if (!std::isdigit(static_cast<unsigned char>(c_.peek()))) c_.fail("exponent must be an integer literal");
            const std::size_t at = c_.index();
            const Rational k = c_.number();
            if (k.get_den() != 1 || !k.get_num().fits_sint_p()) c_.fail_at(at, "exponent must be an integer literal");
            if (paren) c_.expect(')');
            const int e = static_cast<int>(k.get_num().get_si());
            if (base.is_zero() && neg) c_.fail_at(at, "zero raised to a negative power");
            return Expression::power(base, neg ? -e : e);
        }
        return base;
    }

    Expression primary()
    {
        const char ch = c_.peek();
        if (ch == '(') {
            c_.accept('(');
            Expression e = expr();
            c_.expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return Expression::constant(c_.number());
        if (!c_.at_ident()) {
            if (ch == '\0') c_.fail("unexpected end of expression");
            c_.fail(std::string("unexpected '") + ch + "'");
        }
        const std::size_t at = c_.index();
        const std::string id = c_.ident();
        if (c_.peek() == '(') {
            static const std::map<std::string, Func> funcs = {
                {"sin", Func::Sin}, {"cos", Func::Cos}, {"exp", Func::Exp}, {"ln", Func::Ln}};
            if (const auto it = funcs.find(id); it != funcs.end()) {
                c_.accept('(');
                Expression arg = expr();
                c_.expect(')');
                if (it->second == Func::Ln && arg.is_zero()) c_.fail_at(at, "ln(0)");
                return Expression::apply(it->second, arg);
            }
            if (id.size() > 1 && id[0] == 'd' && scope_.is_coord(id.substr(1))) {
                c_.accept('(');
                Expression arg = expr();
                c_.expect(')');
                return differentiate(arg, id.substr(1), scope_.deps());
            }
            if (!scope_.declared(id)) c_.fail_at(at, "unknown function or derivative operator '" + id + "'");
        }
        if (scope_.is_coord(id)) return Expression::coordinate(id);
        if (scope_.is_param(id)) return Expression::parameter(id);
        if (scope_.is_field(id)) return Expression::field(id);
        c_.fail_at(at, "undeclared symbol '" + id + "'");
    }

    Cursor& c_;
    const Scope& scope_;
};

std::vector<std::string> ident_list(Cursor& c)
{
    std::vector<std::string> out;
    if (c.done()) c.fail("expected identifier");
    do {
        out.push_back(c.ident());
    } while (c.accept(','));
    if (!c.done()) c.fail("unexpected text after list");
    return out;
}

std::optional<std::string> take_label(Cursor& c)
{
    const std::size_t save = c.index();
    if (c.at_ident()) {
        std::string id = c.ident();
        if (c.accept(':')) return id;
    }
    c.set_index(save);
    return std::nullopt;
}

Expression parse_side(Cursor& c, const Scope& scope)
{
    ExprParser p(c, scope);
    Expression lhs = p.expr();
    if (c.accept('=')) {
        Expression rhs = p.expr();
        lhs = lhs - rhs;
    }
    if (!c.done()) c.fail("unexpected '" + std::string(1, c.peek()) + "'");
    return lhs;
}

std::vector<std::string> coords_of(const PdeSystem& sys, const Expression& e)
{
    std::set<std::string> used;
    for (const auto& s : collect_symbols(e)) {
        if (sys.frame.has(s)) used.insert(s);
    }
    for (const auto& a : collect_atoms(e)) {
        if (const auto* f = sys.field(a.field)) used.insert(f->coords.begin(), f->coords.end());
    }
    std::vector<std::string> out;
    for (const auto& c : sys.frame.coords) {
        if (used.count(c)) out.push_back(c);
    }
    return out;
}

}  // namespace

PdeSystem parse_system(const std::string& source)
{
    PdeSystem sys;
    Scope scope(sys);
    bool has_time = false;
    bool has_normal = false;
    int last_line = 1;

    const auto declare_symbol = [&](Cursor& c, std::size_t at, const std::string& s) {
        if (keywords().count(s)) c.fail_at(at, "'" + s + "' is a reserved word");
        if (scope.declared(s)) c.fail_at(at, "duplicate declaration of '" + s + "'");
    };

    for (const auto& line : split_lines(source)) {
        last_line = line.at(line.text.size()).line;
        Cursor c(line, 0);
        const std::size_t kw_at = c.index();
        if (!c.at_ident()) c.fail("expected a statement keyword");
        const std::string kw = c.ident();

        if (kw == "name") {
            sys.name = c.ident();
            if (!c.done()) c.fail("unexpected text after name");
        } else if (kw == "title") {
            c.skip_ws();
            sys.title = c.rest();
            while (!sys.title.empty() && std::isspace(static_cast<unsigned char>(sys.title.back()))) sys.title.pop_back();
        } else if (kw == "coords") {
            c.skip_ws();
            const std::size_t at = c.index();
            for (const auto& s : ident_list(c)) {
                declare_symbol(c, at, s);
                sys.frame.coords.push_back(s);
            }
        } else if (kw == "time" || kw == "normal") {
            c.skip_ws();
            const std::size_t at = c.index();
            const std::string s = c.ident();
            if (!c.done()) c.fail("unexpected text after " + kw);
            if (!sys.frame.has(s)) c.fail_at(at, "'" + s + "' is not a declared coordinate");
            std::string& slot = kw == "time" ? sys.frame.time : sys.frame.normal;
            bool& flag = kw == "time" ? has_time : has_normal;
            if (flag) c.fail_at(kw_at, "duplicate '" + kw + "' declaration");
            slot = s;
            flag = true;
            if (has_time && has_normal && sys.frame.time == sys.frame.normal) {
                c.fail_at(at, "time and normal coordinates must differ");
            }
        } else if (kw == "tangent") {
            c.skip_ws();
            const std::size_t at = c.index();
            for (const auto& s : ident_list(c)) {
                if (!sys.frame.has(s)) c.fail_at(at, "'" + s + "' is not a declared coordinate");
                sys.frame.tangents.push_back(s);
            }
        } else if (kw == "param") {
            c.skip_ws();
            const std::size_t at = c.index();
            for (const auto& s : ident_list(c)) {
                declare_symbol(c, at, s);
                sys.params.push_back(s);
            }
        } else if (kw == "field" || kw == "aux") {
            c.skip_ws();
            const std::size_t at = c.index();
            FieldDecl f;
            f.name = c.ident();
            f.role = kw == "field" ? FieldRole::Unknown : FieldRole::Auxiliary;
            declare_symbol(c, at, f.name);
            c.expect('(');
            if (!c.accept(')')) {
                do {
                    const std::size_t cat = c.index();
                    const std::string s = c.ident();
                    if (!sys.frame.has(s)) c.fail_at(cat, "'" + s + "' is not a declared coordinate");
                    f.coords.push_back(s);
                } while (c.accept(','));
                c.expect(')');
            }
            if (!c.done()) c.fail("unexpected text after field declaration");
            sys.fields.push_back(std::move(f));
            scope.refresh();
        } else if (kw == "let") {
            c.skip_ws();
            const std::size_t at = c.index();
            FieldDecl f;
            f.name = c.ident();
            f.role = FieldRole::Defined;
            declare_symbol(c, at, f.name);
            c.expect('=');
            ExprParser p(c, scope);
            f.definition = normalize(p.expr());
            if (!c.done()) c.fail("unexpected '" + std::string(1, c.peek()) + "'");
            f.coords = coords_of(sys, f.definition);
            sys.fields.push_back(std::move(f));
            scope.refresh();
        } else if (kw == "eq" || kw == "over" || kw == "rel") {
            Equation eq;
            eq.kind = kw == "eq" ? EquationKind::Determined : kw == "over" ? EquationKind::Over : EquationKind::Relation;
            if (auto label = take_label(c)) eq.label = *label;
            if (c.done()) c.fail("empty equation");
            eq.expr = normalize(parse_side(c, scope));
            auto& list = eq.kind == EquationKind::Determined ? sys.equations
                         : eq.kind == EquationKind::Over     ? sys.over
                                                             : sys.relations;
            list.push_back(std::move(eq));
        } else if (kw == "normal_form") {
            if (!has_normal) c.fail("normal_form requires a prior 'normal' declaration");
            c.skip_ws();
            const std::size_t at = c.index();
            ExprParser p(c, scope);
            const Expression lhs = p.expr();
            if (lhs.kind() != ExprKind::Derivative) c.fail_at(at, "normal_form target must be a derivative atom");
            const auto& atom = lhs.derivative();
            const auto* f = sys.field(atom.field);
            if (!f || f->role != FieldRole::Unknown || atom.index.total() != 1 ||
                atom.index.order(sys.frame.normal) != 1) {
                c.fail_at(at, "normal_form target must be d" + sys.frame.normal + "(<unknown field>)");
            }
            c.expect('=');
            const Expression rhs = p.expr();
            if (!c.done()) c.fail("unexpected '" + std::string(1, c.peek()) + "'");
            if (!sys.normal_form.emplace(atom, normalize(rhs)).second) {
                c.fail_at(at, "duplicate normal_form for " + atom.to_string());
            }
        } else {
            c.fail_at(kw_at, "unknown statement '" + kw + "'");
        }
    }

    if (sys.frame.coords.empty()) throw ParseError("missing 'coords' declaration", last_line, 1);
    if (!has_time) throw ParseError("missing 'time' declaration", last_line, 1);
    if (!has_normal) throw ParseError("missing 'normal' declaration", last_line, 1);
    if (sys.equations.empty() && sys.over.empty()) throw ParseError("no equations", last_line, 1);
    const auto p = sys.unknowns().size();
    if (sys.equations.size() != p) {
        throw ParseError(std::to_string(sys.equations.size()) + " determined equations for " + std::to_string(p) +
                             " unknown fields",
                         last_line, 1);
    }
    return sys;
}

Expression parse_expression(const PdeSystem& sys, const std::string& text)
{
    PdeSystem copy = sys;
    Scope scope(copy);
    scope.refresh();
    Logical line;
    line.text = text;
    for (std::size_t i = 0; i <= text.size(); ++i) line.pos.push_back({1, static_cast<int>(i) + 1});
    Cursor c(line, 0);
    return parse_side(c, scope);
}

}  // namespace overdet

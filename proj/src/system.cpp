#include "overdet/errors.hpp"
#include "overdet/normalize.hpp"
#include "overdet/system.hpp"

#include <json.hpp>

#include <algorithm>

namespace overdet {

bool CoordinateFrame::has(const std::string& c) const
{
    return std::find(coords.begin(), coords.end(), c) != coords.end();
}

std::vector<std::string> CoordinateFrame::passive() const
{
    std::vector<std::string> out;
    for (const auto& c : coords) {
        if (c == time || c == normal) continue;
        if (std::find(tangents.begin(), tangents.end(), c) != tangents.end()) continue;
        out.push_back(c);
    }
    return out;
}

const FieldDecl* PdeSystem::field(const std::string& n) const
{
    for (const auto& f : fields) {
        if (f.name == n) return &f;
    }
    return nullptr;
}

std::vector<std::string> PdeSystem::unknowns() const
{
    std::vector<std::string> out;
    for (const auto& f : fields) {
        if (f.role == FieldRole::Unknown) out.push_back(f.name);
    }
    return out;
}

Dependencies PdeSystem::dependencies() const
{
    Dependencies d;
    for (const auto& f : fields) d.declare(f.name, {f.coords.begin(), f.coords.end()});
    return d;
}

Expression PdeSystem::expand(const Expression& e) const
{
    const Dependencies deps = dependencies();
    Expression out = e;
    for (auto it = fields.rbegin(); it != fields.rend(); ++it) {
        if (it->role == FieldRole::Defined) out = substitute_field(out, it->name, it->definition, deps);
    }
    return out;
}

std::vector<Equation> PdeSystem::counted_equations() const
{
    std::vector<Equation> out = equations;
    out.insert(out.end(), over.begin(), over.end());
    return out;
}

namespace {

std::string join(const std::vector<std::string>& xs)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i > 0) out += ", ";
        out += xs[i];
    }
    return out;
}

std::string equation_line(const char* kw, const Equation& eq)
{
    std::string out = kw;
    out += " ";
    if (!eq.label.empty()) out += eq.label + ": ";
    return out + eq.expr.to_string() + "\n";
}

}  // namespace

std::string render_system(const PdeSystem& sys)
{
    std::string out;
    if (!sys.name.empty()) out += "name " + sys.name + "\n";
    if (!sys.title.empty()) out += "title " + sys.title + "\n";
    out += "coords " + join(sys.frame.coords) + "\n";
    out += "time " + sys.frame.time + "\n";
    out += "normal " + sys.frame.normal + "\n";
    if (!sys.frame.tangents.empty()) out += "tangent " + join(sys.frame.tangents) + "\n";
    if (!sys.params.empty()) out += "param " + join(sys.params) + "\n";
    for (const auto& f : sys.fields) {
        switch (f.role) {
            case FieldRole::Unknown: out += "field " + f.name + "(" + join(f.coords) + ")\n"; break;
            case FieldRole::Auxiliary: out += "aux " + f.name + "(" + join(f.coords) + ")\n"; break;
            case FieldRole::Defined: out += "let " + f.name + " = " + f.definition.to_string() + "\n"; break;
        }
    }
    for (const auto& eq : sys.equations) out += equation_line("eq", eq);
    for (const auto& eq : sys.over) out += equation_line("over", eq);
    for (const auto& eq : sys.relations) out += equation_line("rel", eq);
    for (const auto& [atom, rhs] : sys.normal_form) {
        out += "normal_form " + atom.to_string() + " = " + rhs.to_string() + "\n";
    }
    return out;
}

std::string system_json(const PdeSystem& sys)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = sys.name;
    j["title"] = sys.title;
    j["coords"] = sys.frame.coords;
    j["time"] = sys.frame.time;
    j["normal"] = sys.frame.normal;
    j["tangents"] = sys.frame.tangents;
    j["params"] = sys.params;
    ordered_json fields = ordered_json::array();
    for (const auto& f : sys.fields) {
        ordered_json jf;
        jf["name"] = f.name;
        jf["role"] = f.role == FieldRole::Unknown ? "unknown" : f.role == FieldRole::Auxiliary ? "aux" : "let";
        jf["coords"] = f.coords;
        if (f.role == FieldRole::Defined) jf["definition"] = f.definition.to_string();
        fields.push_back(std::move(jf));
    }
    j["fields"] = std::move(fields);
    const auto eqs = [](const std::vector<Equation>& list) {
        ordered_json a = ordered_json::array();
        for (const auto& e : list) a.push_back({{"label", e.label}, {"expr", e.expr.to_string()}});
        return a;
    };
    j["equations"] = eqs(sys.equations);
    j["over"] = eqs(sys.over);
    j["relations"] = eqs(sys.relations);
    const auto c = count_balance(sys);
    j["counts"] = {{"equations", c.equations}, {"unknowns", c.unknowns}};
    return j.dump(2);
}

Counts count_balance(const PdeSystem& sys)
{
    return {static_cast<int>(sys.equations.size() + sys.over.size()), static_cast<int>(sys.unknowns().size())};
}

bool is_normal_atom(const PdeSystem& sys, const DerivativeAtom& a)
{
    if (a.index.order(sys.frame.normal) == 0) return false;
    const auto* f = sys.field(a.field);
    return f != nullptr && f->role == FieldRole::Unknown;
}

NormalForm solve_normal_form(const PdeSystem& sys)
{
    NormalForm nf;
    for (const auto& name : sys.unknowns()) {
        nf.targets.push_back(DerivativeAtom{name, MultiIndex({{sys.frame.normal, 1}})});
    }

    if (!sys.normal_form.empty()) {
        for (const auto& t : nf.targets) {
            const auto it = sys.normal_form.find(t);
            if (it == sys.normal_form.end()) {
                throw SingularSystemError("normal_form block has no entry for " + t.to_string());
            }
            nf.rhs.emplace(t, normalize(sys.expand(it->second)));
        }
    } else {
        std::vector<Expression> eqs;
        for (const auto& eq : sys.equations) eqs.push_back(normalize(sys.expand(eq.expr)));
        auto sol = solve_linear_symbolic(eqs, nf.targets);
        nf.rhs = std::move(sol.values);
    }

    for (const auto& [t, rhs] : nf.rhs) {
        for (const auto& a : collect_atoms(rhs)) {
            if (is_normal_atom(sys, a)) {
                throw NonAffineError("normal form for " + t.to_string() + " still contains " + a.to_string());
            }
        }
    }
    return nf;
}

}  // namespace overdet

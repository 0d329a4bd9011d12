#include "overdet/reduction.hpp"

#include <json.hpp>

#include <sstream>

namespace overdet {

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const Matrix& m)
{
    ordered_json out = ordered_json::array();
    for (const auto& row : m) {
        ordered_json r = ordered_json::array();
        for (const auto& e : row) r.push_back(e.to_string());
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::string ReductionResult::to_json() const
{
    ordered_json j;
    j["system"] = system;
    j["over_index"] = over_index;
    j["normal_form"] = normal_form;
    ordered_json links = ordered_json::array();
    for (const auto& g : chain.links) links.push_back(g.to_string());
    j["chain"] = std::move(links);
    j["unknowns"] = matrix.unknowns;
    j["leading_matrix"] = matrix_json(matrix.entries);
    j["determinant"] = solvability.factored;
    j["determinant_expanded"] = solvability.determinant.to_string();
    j["determinant_zero"] = solvability.determinant_zero;
    ordered_json hints = ordered_json::array();
    for (const auto& h : solvability.hints) {
        ordered_json jh;
        jh["point"] = h.point;
        if (!h.exact.empty()) jh["exact"] = h.exact;
        hints.push_back(std::move(jh));
    }
    j["vanishing_hints"] = std::move(hints);
    if (cauchy) {
        ordered_json c = ordered_json::object();
        for (const auto& t : cauchy->targets) c[t.to_string()] = cauchy->rhs.at(t).to_string();
        j["cauchy"] = std::move(c);
    } else {
        j["cauchy"] = nullptr;
    }
    if (further) {
        j["further_reduction"] = {{"residual", further->residual.to_string()}, {"stalls", further->stalls}};
    }
    j["counts"] = {{"equations", counts.equations}, {"unknowns", counts.unknowns}};
    j["notes"] = notes;
    return j.dump(2) + "\n";
}

std::string ReductionResult::to_latex() const
{
    std::ostringstream out;
    out << "% " << system << ", over-determining equation " << over_index << "\n";
    out << "\\begin{align}\n";
    for (std::size_t l = 0; l < chain.links.size(); ++l) {
        out << "  G^{(" << l + 1 << ")} &= " << chain.links[l].to_latex() << " = 0";
        out << (l + 1 < chain.links.size() ? " \\\\\n" : "\n");
    }
    out << "\\end{align}\n";
    out << "\\[\n  |a_{ji}| = \\begin{vmatrix}\n";
    for (std::size_t j = 0; j < matrix.entries.size(); ++j) {
        out << "    ";
        for (std::size_t i = 0; i < matrix.entries[j].size(); ++i) {
            if (i > 0) out << " & ";
            out << matrix.entries[j][i].to_latex();
        }
        out << (j + 1 < matrix.entries.size() ? " \\\\\n" : "\n");
    }
    out << "  \\end{vmatrix} = " << solvability.determinant.to_latex() << "\n\\]\n";
    if (cauchy) {
        out << "\\begin{align}\n";
        for (std::size_t k = 0; k < cauchy->targets.size(); ++k) {
            const auto& t = cauchy->targets[k];
            out << "  " << Expression::atom(t).to_latex() << " &= " << cauchy->rhs.at(t).to_latex();
            out << (k + 1 < cauchy->targets.size() ? " \\\\\n" : "\n");
        }
        out << "\\end{align}\n";
    }
    return out.str();
}

std::string ReductionResult::to_text() const
{
    std::ostringstream out;
    out << "system: " << system << " (over " << over_index << ")\n";
    out << "counts: " << counts.equations << " equations, " << counts.unknowns << " unknowns\n";
    out << "normal form:\n";
    for (const auto& s : normal_form) out << "  " << s << "\n";
    out << "chain:\n";
    for (std::size_t l = 0; l < chain.links.size(); ++l) {
        out << "  G" << l + 1 << " = " << chain.links[l].to_string() << "\n";
    }
    out << "leading matrix:\n";
    for (const auto& row : matrix.entries) {
        out << "  [";
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? ", " : "") << row[i].to_string();
        out << "]\n";
    }
    out << "determinant: " << solvability.factored << "\n";
    for (const auto& h : solvability.hints) {
        out << "  vanishes near";
        for (const auto& [k, v] : h.point) {
            const auto it = h.exact.find(k);
            out << " " << k << "=" << (it != h.exact.end() ? it->second : std::to_string(v));
        }
        out << "\n";
    }
    if (cauchy) {
        out << "cauchy form:\n";
        for (const auto& t : cauchy->targets) out << "  " << t.to_string() << " = " << cauchy->rhs.at(t).to_string() << "\n";
    }
    for (const auto& n : notes) out << "note: " << n << "\n";
    return out.str();
}

}  // namespace overdet

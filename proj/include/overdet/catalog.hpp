// Built-in systems: DSL sources, expected counts, manufactured solutions and
// golden derived expressions.
#pragma once

#include "overdet/errors.hpp"
#include "overdet/numeric.hpp"
#include "overdet/system.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace overdet {

class UnknownEntryError : public Error {
public:
    using Error::Error;
};

enum class Feasibility {
    Full,                    // reduction, Cauchy form and closure
    SymbolicDerivationOnly,  // closed-form derivations, no full reduction
    CountsAndResidualOnly,
};

[[nodiscard]] std::string feasibility_name(Feasibility f);

struct AxisRange {
    std::string symbol;
    double lo = 0;
    double hi = 1;
};

struct ManufacturedSolution {
    std::string description;
    std::vector<std::pair<std::string, std::string>> fields;  // field -> closed form, DSL syntax
    std::map<std::string, double> params;
    std::vector<AxisRange> primary;        // two axes sampled with N points each
    std::map<std::string, double> frozen;  // remaining coordinates
    std::vector<std::string> aux_relations;
    std::vector<std::string> unverified;   // equation labels left out of the residual
    bool fd_supported = true;
};

struct GoldenItem {
    std::string label;
    std::string expression;  // DSL syntax
};

struct CatalogEntry {
    std::string name;
    std::string topic;
    std::string source;
    Counts expected;
    Feasibility feasibility = Feasibility::Full;
    std::optional<ManufacturedSolution> manufactured;
    std::vector<GoldenItem> golden;
    std::vector<std::string> alternates;  // variant readings kept for reference
    std::vector<std::string> notes;
    PdeSystem system;

    /// Closed forms parsed against `system`; empty without a manufactured
    /// solution.
    [[nodiscard]] std::map<std::string, Expression> exact_fields() const;
    [[nodiscard]] Binding parameters() const;
};

/// Parsed and count-checked entry. Throws UnknownEntryError.
[[nodiscard]] const CatalogEntry& catalog_get(const std::string& name);

/// Entry names in presentation order.
[[nodiscard]] std::vector<std::string> catalog_names();

[[nodiscard]] std::string catalog_table();
[[nodiscard]] std::string catalog_list_json();
[[nodiscard]] std::string catalog_show_json(const CatalogEntry& e);

/// Grid for the manufactured solution: N points on each primary axis;
/// frozen axes get one point (analytic) or five points spaced like the
/// first primary axis (finite differences).
[[nodiscard]] Grid manufactured_grid(const CatalogEntry& e, int n, ResidualMode mode);

/// Residuals of every verifiable equation on the manufactured solution.
/// Throws VerificationError when the entry has none or the mode is
/// unsupported.
[[nodiscard]] ResidualReport verify_entry(const CatalogEntry& e, int n, ResidualMode mode);

struct GoldenComparison {
    std::string label;
    std::string derived;
    std::string golden;
    bool equal = false;
    std::string error;  // pipeline failure, empty on success
};

struct GoldenReport {
    std::string entry;
    std::vector<GoldenComparison> items;

    [[nodiscard]] bool all_equal() const;
    [[nodiscard]] const GoldenComparison& at(const std::string& label) const;
    [[nodiscard]] std::string to_json() const;
};

/// Re-derives the entry's golden expressions and compares normalized forms
/// structurally.
[[nodiscard]] GoldenReport derive_golden(const std::string& name);

/// Source text of every entry, embedded at build time.
[[nodiscard]] const std::map<std::string, std::string>& embedded_catalog_sources();

}  // namespace overdet

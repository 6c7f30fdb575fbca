#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pcap/errors.hpp"
#include "pcap/submersion.hpp"

namespace pcap {

// Optional per-file overrides of engine defaults; absent fields fall back
// to the flag or built-in value.
struct SpecOptions {
    std::optional<double> T_max;
    std::optional<double> rel_tol;
    std::optional<double> margin;
    std::optional<long> grid_size;
};

enum class SpecKind { WarpedProduct, Submersion };

struct LoadedSpec {
    SpecKind kind = SpecKind::WarpedProduct;
    ModelManifold manifold;      // populated when kind == WarpedProduct
    SubmersionSpec submersion;   // populated when kind == Submersion
    SpecOptions options;
};

// Strictly validated JSON spec files: unknown keys are rejected by name,
// values are type-checked, expressions must parse, and the assembled object
// passes the module-level validation (positivity on the working grid).
// Throws SpecError for file/format problems and PreconditionError for
// semantic ones.
LoadedSpec parse_spec_json(const std::string& text);
LoadedSpec load_spec_file(const std::string& path);

// Flat ordered record of one operation's inputs and outputs. Doubles are
// carried exactly; both encodings print them with 17 significant digits so
// either one round-trips losslessly.
class ResultRecord {
  public:
    using Value = std::variant<std::string, double, long long, bool>;

    void add(const std::string& key, const std::string& v) {
        entries_.emplace_back(key, Value(v));
    }
    void add(const std::string& key, const char* v) {
        entries_.emplace_back(key, Value(std::string(v)));
    }
    void add(const std::string& key, double v) {
        entries_.emplace_back(key, Value(v));
    }
    void add(const std::string& key, long long v) {
        entries_.emplace_back(key, Value(v));
    }
    void add(const std::string& key, bool v) {
        entries_.emplace_back(key, Value(v));
    }

    const std::vector<std::pair<std::string, Value>>& entries() const {
        return entries_;
    }

    std::string to_json() const;       // one object, keys in insertion order
    std::string to_csv_header() const; // comma-joined keys
    std::string to_csv_row() const;    // comma-joined values

    static ResultRecord from_json(const std::string& text);
    static ResultRecord from_csv(const std::string& header,
                                 const std::string& row);

  private:
    std::vector<std::pair<std::string, Value>> entries_;
};

// 17-significant-digit decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace pcap

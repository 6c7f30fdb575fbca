#include "pcap/spec_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace pcap {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& key, const std::string& what) {
    throw SpecError("key \"" + key + "\" " + what);
}

double get_number(const ordered_json& j, const std::string& key) {
    if (!j.is_number()) bad_key(key, "must be a number");
    return j.get<double>();
}

double get_positive(const ordered_json& j, const std::string& key) {
    double v = get_number(j, key);
    if (!(v > 0.0)) bad_key(key, "must be positive");
    return v;
}

long get_integer(const ordered_json& j, const std::string& key) {
    if (!j.is_number_integer()) bad_key(key, "must be an integer");
    return j.get<long>();
}

ProfileExpr get_expression(const ordered_json& j, const std::string& key) {
    if (!j.is_string()) bad_key(key, "must be an expression string");
    try {
        return parse_profile(j.get<std::string>());
    } catch (const ParseError& e) {
        bad_key(key, std::string("does not parse: ") + e.what() +
                         " (at offset " + std::to_string(e.position()) + ")");
    }
}

void reject_unknown(const ordered_json& obj,
                    const std::vector<std::string>& allowed,
                    const char* where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const std::string& k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw SpecError("unknown key \"" + item.key() + "\" in " + where);
    }
}

SpecOptions parse_options(const ordered_json& j) {
    if (!j.is_object()) throw SpecError("key \"options\" must be an object");
    reject_unknown(j, {"T_max", "rel_tol", "margin", "grid_size"},
                   "the options block");
    SpecOptions o;
    if (j.contains("T_max")) o.T_max = get_positive(j["T_max"], "T_max");
    if (j.contains("rel_tol"))
        o.rel_tol = get_positive(j["rel_tol"], "rel_tol");
    if (j.contains("margin")) {
        double m = get_number(j["margin"], "margin");
        if (m < 0.0) bad_key("margin", "must be nonnegative");
        o.margin = m;
    }
    if (j.contains("grid_size")) {
        long g = get_integer(j["grid_size"], "grid_size");
        if (g < 2) bad_key("grid_size", "must be at least 2");
        o.grid_size = g;
    }
    return o;
}

}  // namespace

LoadedSpec parse_spec_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw SpecError(std::string("spec file is not valid JSON: ") +
                        e.what());
    }
    if (!doc.is_object())
        throw SpecError("spec file must contain a JSON object");
    if (!doc.contains("kind"))
        throw SpecError("key \"kind\" is required");
    if (!doc["kind"].is_string())
        throw SpecError(
            "key \"kind\" must be \"warped_product\" or \"submersion\"");
    const std::string kind = doc["kind"].get<std::string>();

    LoadedSpec out;
    if (kind == "warped_product") {
        out.kind = SpecKind::WarpedProduct;
        reject_unknown(doc,
                       {"kind", "base_dim", "sigma", "warp", "fiber_dim",
                        "fiber_volume", "inner_radius", "options"},
                       "a warped_product spec");
        if (!doc.contains("base_dim"))
            throw SpecError("key \"base_dim\" is required");
        if (!doc.contains("sigma"))
            throw SpecError("key \"sigma\" is required");

        ModelManifold& m = out.manifold;
        m.base_dim = static_cast<int>(
            get_integer(doc["base_dim"], "base_dim"));
        m.base_profile = get_expression(doc["sigma"], "sigma");
        m.warp = doc.contains("warp") ? get_expression(doc["warp"], "warp")
                                      : make_const(1.0);
        if (doc.contains("fiber_dim")) {
            long fd = get_integer(doc["fiber_dim"], "fiber_dim");
            if (fd < 0) bad_key("fiber_dim", "must be nonnegative");
            m.fiber_dim = static_cast<int>(fd);
        }
        if (doc.contains("fiber_volume"))
            m.fiber_volume = get_positive(doc["fiber_volume"],
                                          "fiber_volume");
        if (doc.contains("inner_radius"))
            m.inner_radius = get_positive(doc["inner_radius"],
                                          "inner_radius");
        if (doc.contains("options"))
            out.options = parse_options(doc["options"]);
        validate(m);
    } else if (kind == "submersion") {
        out.kind = SpecKind::Submersion;
        reject_unknown(doc,
                       {"kind", "base_dim", "sigma", "fiber_volume_fn",
                        "claimed_bound", "inner_radius", "options"},
                       "a submersion spec");
        if (!doc.contains("base_dim"))
            throw SpecError("key \"base_dim\" is required");
        if (!doc.contains("sigma"))
            throw SpecError("key \"sigma\" is required");
        if (!doc.contains("fiber_volume_fn"))
            throw SpecError("key \"fiber_volume_fn\" is required");

        SubmersionSpec& s = out.submersion;
        s.base_dim = static_cast<int>(
            get_integer(doc["base_dim"], "base_dim"));
        s.base_profile = get_expression(doc["sigma"], "sigma");
        s.fiber_volume_fn =
            get_expression(doc["fiber_volume_fn"], "fiber_volume_fn");
        if (doc.contains("claimed_bound"))
            s.claimed_bound = get_positive(doc["claimed_bound"],
                                           "claimed_bound");
        if (doc.contains("inner_radius"))
            s.inner_radius = get_positive(doc["inner_radius"],
                                          "inner_radius");
        if (doc.contains("options"))
            out.options = parse_options(doc["options"]);
        validate(s);
    } else {
        throw SpecError(
            "key \"kind\" must be \"warped_product\" or \"submersion\"");
    }
    return out;
}

LoadedSpec load_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_spec_json(buf.str());
}

// --- result records ---------------------------------------------------------

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // Keep integral-valued doubles recognizable as doubles (and preserve the
    // sign of -0.0) by forcing a decimal point.
    bool bare_integer = !s.empty();
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (c < '0' || c > '9') {
            bare_integer = false;
            break;
        }
    }
    if (bare_integer) s += ".0";
    return s;
}

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string csv_quote(const std::string& s) {
    bool needs = s.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string value_text(const ResultRecord::Value& v) {
    if (std::holds_alternative<std::string>(v))
        return std::get<std::string>(v);
    if (std::holds_alternative<double>(v))
        return format_double(std::get<double>(v));
    if (std::holds_alternative<long long>(v))
        return std::to_string(std::get<long long>(v));
    return std::get<bool>(v) ? "true" : "false";
}

// CSV cells and JSON-parsed scalars carry no type tags; recover the most
// specific type the text admits.
ResultRecord::Value typed_from_text(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    if (!s.empty()) {
        char* end = nullptr;
        // Integer form: optional sign and digits only.
        bool integral = true;
        for (std::size_t i = 0; i < s.size(); ++i) {
            char c = s[i];
            if (i == 0 && (c == '+' || c == '-') && s.size() > 1) continue;
            if (c < '0' || c > '9') {
                integral = false;
                break;
            }
        }
        if (integral) {
            long long n = std::strtoll(s.c_str(), &end, 10);
            if (end == s.c_str() + s.size()) return n;
        }
        double d = std::strtod(s.c_str(), &end);
        if (end == s.c_str() + s.size()) return d;
    }
    return s;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

std::string ResultRecord::to_json() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, value] : entries_) {
        if (!first) out += ", ";
        first = false;
        out += '"';
        out += json_escape(key);
        out += "\": ";
        bool quote = std::holds_alternative<std::string>(value) ||
                     (std::holds_alternative<double>(value) &&
                      !std::isfinite(std::get<double>(value)));
        if (quote) {
            out += '"';
            out += json_escape(value_text(value));
            out += '"';
        } else {
            out += value_text(value);
        }
    }
    out += "}";
    return out;
}

std::string ResultRecord::to_csv_header() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        if (!out.empty()) out += ',';
        out += csv_quote(key);
    }
    return out;
}

std::string ResultRecord::to_csv_row() const {
    std::string out;
    bool first = true;
    for (const auto& [key, value] : entries_) {
        if (!first) out += ',';
        first = false;
        out += csv_quote(value_text(value));
    }
    return out;
}

ResultRecord ResultRecord::from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw SpecError(std::string("record is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SpecError("record must be a JSON object");
    ResultRecord rec;
    for (const auto& item : doc.items()) {
        const ordered_json& v = item.value();
        if (v.is_string()) {
            // Non-finite doubles are carried as quoted tokens since bare
            // inf/nan are not valid JSON.
            const std::string s = v.get<std::string>();
            if (s == "inf")
                rec.add(item.key(),
                        std::numeric_limits<double>::infinity());
            else if (s == "-inf")
                rec.add(item.key(),
                        -std::numeric_limits<double>::infinity());
            else if (s == "nan")
                rec.add(item.key(),
                        std::numeric_limits<double>::quiet_NaN());
            else
                rec.add(item.key(), s);
        } else if (v.is_boolean())
            rec.add(item.key(), v.get<bool>());
        else if (v.is_number_integer())
            rec.add(item.key(), static_cast<long long>(v.get<long long>()));
        else if (v.is_number())
            rec.add(item.key(), v.get<double>());
        else
            throw SpecError("record field \"" + item.key() +
                            "\" must be a scalar");
    }
    return rec;
}

ResultRecord ResultRecord::from_csv(const std::string& header,
                                    const std::string& row) {
    std::vector<std::string> keys = split_csv(header);
    std::vector<std::string> cells = split_csv(row);
    if (keys.size() != cells.size())
        throw SpecError("CSV row has a different arity than its header");
    ResultRecord rec;
    for (std::size_t i = 0; i < keys.size(); ++i)
        rec.entries_.emplace_back(keys[i], typed_from_text(cells[i]));
    return rec;
}

}  // namespace pcap

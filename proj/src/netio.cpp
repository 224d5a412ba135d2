#include "dualflow/netio.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace dualflow {

using nlohmann::json;

ParseError::ParseError(int line, int column, const std::string& message)
    : InvalidArgument(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      message_(message) {}

namespace {

bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class LineCursor {
public:
    LineCursor(const std::string& line, int lineno) : s_(line), line_(lineno) {}

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    int column() const { return static_cast<int>(pos_) + 1; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, column(), msg); }
    [[noreturn]] void fail_at(int col, const std::string& msg) const { throw ParseError(line_, col, msg); }

    bool accept(const std::string& tok) {
        skip_ws();
        if (s_.compare(pos_, tok.size(), tok) == 0) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(const std::string& tok) {
        if (!accept(tok)) fail("expected '" + tok + "'");
    }

    std::string name(const char* what) {
        skip_ws();
        if (pos_ >= s_.size() || !is_name_start(s_[pos_])) fail(std::string("expected ") + what);
        const std::size_t b = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
        return s_.substr(b, pos_ - b);
    }

    std::string label() {
        skip_ws();
        const std::size_t b = pos_;
        while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
        if (pos_ == b) fail("expected reaction label");
        return s_.substr(b, pos_ - b);
    }

    bool at_digit() {
        skip_ws();
        return pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]));
    }

    std::int64_t integer() {
        skip_ws();
        const int col = column();
        std::int64_t v = 0;
        const auto r = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
        if (r.ec == std::errc::result_out_of_range) fail_at(col, "integer out of range");
        if (r.ec != std::errc()) fail_at(col, "expected integer");
        pos_ = static_cast<std::size_t>(r.ptr - s_.data());
        return v;
    }

    double number() {
        skip_ws();
        const int col = column();
        std::size_t end = pos_;
        while (end < s_.size() && !std::isspace(static_cast<unsigned char>(s_[end])) && s_[end] != '#') ++end;
        double v = 0.0;
        const auto r = std::from_chars(s_.data() + pos_, s_.data() + end, v);
        if (r.ec != std::errc() || r.ptr != s_.data() + end) fail_at(col, "malformed number");
        pos_ = end;
        return v;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    int line_;
};

struct ParsedComplex {
    IntVec composition;
    int column = 0;
};

ParsedComplex parse_complex(LineCursor& cur, const std::map<std::string, int>& index) {
    ParsedComplex c;
    c.column = (cur.skip_ws(), cur.column());
    c.composition = IntVec::Zero(static_cast<Eigen::Index>(index.size()));
    bool first = true;
    while (true) {
        std::int64_t coeff = 1;
        const int col = (cur.skip_ws(), cur.column());
        if (cur.at_digit()) {
            coeff = cur.integer();
            if (coeff == 0 && first && !is_name_start(cur.peek())) return c;
            if (coeff <= 0) cur.fail_at(col, "stoichiometric coefficient must be positive");
            if (coeff > (std::int64_t{1} << 31)) cur.fail_at(col, "stoichiometric coefficient too large");
        }
        const int name_col = (cur.skip_ws(), cur.column());
        const std::string name = cur.name("species name");
        const auto it = index.find(name);
        if (it == index.end()) cur.fail_at(name_col, "unknown species '" + name + "'");
        std::int64_t& slot = c.composition(it->second);
        if (slot > (std::int64_t{1} << 31)) cur.fail_at(col, "stoichiometric coefficient too large");
        slot += coeff;
        first = false;
        if (!cur.accept("+")) break;
    }
    return c;
}

std::string strip_comment(const std::string& line) {
    const auto p = line.find('#');
    return p == std::string::npos ? line : line.substr(0, p);
}

std::string format_complex(const IntVec& gamma, const std::vector<std::string>& species) {
    std::string out;
    for (Eigen::Index i = 0; i < gamma.size(); ++i) {
        if (gamma(i) == 0) continue;
        if (!out.empty()) out += " + ";
        if (gamma(i) != 1) out += std::to_string(gamma(i)) + " ";
        out += species[static_cast<std::size_t>(i)];
    }
    return out.empty() ? "0" : out;
}

Vec vec_from_json(const json& j, const char* key) {
    if (!j.is_array()) throw InvalidArgument(std::string("scenario: '") + key + "' must be an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidArgument(std::string("scenario: '") + key + "' must contain numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

std::optional<Vec> optional_vec(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return vec_from_json(j[key], key);
}

void check_length(const std::optional<Vec>& v, int n, const char* key) {
    if (v && v->size() != n)
        throw DimensionError(std::string("scenario: '") + key + "' has length " + std::to_string(v->size()) +
                             ", expected " + std::to_string(n));
}

}  // namespace

ReactionNetwork parse_network(const std::string& text) {
    std::vector<std::string> species;
    std::map<std::string, int> index;
    std::vector<IntVec> vertices;
    std::vector<Edge> edges;
    std::vector<std::string> labels;
    std::map<std::string, int> label_lines;
    std::vector<double> kf, kr;

    auto vertex_of = [&](const IntVec& gamma) {
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            if (vertices[i] == gamma) return static_cast<int>(i);
        }
        vertices.push_back(gamma);
        return static_cast<int>(vertices.size() - 1);
    };

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = strip_comment(raw);
        LineCursor cur(line, lineno);
        if (cur.at_end()) continue;
        const int kw_col = cur.column();
        const std::string keyword = cur.name("'species' or 'reaction'");
        if (keyword == "species") {
            if (!edges.empty()) cur.fail_at(kw_col, "species must be declared before the first reaction");
            if (cur.at_end()) cur.fail("expected at least one species name");
            while (!cur.at_end()) {
                const int col = (cur.skip_ws(), cur.column());
                const std::string name = cur.name("species name");
                if (index.count(name)) cur.fail_at(col, "duplicate species '" + name + "'");
                index[name] = static_cast<int>(species.size());
                species.push_back(name);
            }
        } else if (keyword == "reaction") {
            if (species.empty()) cur.fail_at(kw_col, "reaction before any species declaration");
            const int label_col = (cur.skip_ws(), cur.column());
            const std::string label = cur.label();
            if (label_lines.count(label)) cur.fail_at(label_col, "duplicate reaction label '" + label + "'");
            label_lines[label] = lineno;
            cur.expect(":");
            const ParsedComplex head = parse_complex(cur, index);
            cur.expect("<->");
            const ParsedComplex tail = parse_complex(cur, index);
            if (head.composition == tail.composition)
                cur.fail_at(tail.column, "reaction '" + label + "' has identical complexes on both sides");
            cur.expect(";");
            std::optional<double> f, r;
            while (!cur.at_end()) {
                const int col = (cur.skip_ws(), cur.column());
                const std::string key = cur.name("'kf' or 'kr'");
                if (key != "kf" && key != "kr") cur.fail_at(col, "unknown rate key '" + key + "'");
                cur.expect("=");
                const int num_col = (cur.skip_ws(), cur.column());
                const double val = cur.number();
                if (!std::isfinite(val) || !(val > 0.0))
                    cur.fail_at(num_col, "rate constant must be positive and finite");
                std::optional<double>& slot = key == "kf" ? f : r;
                if (slot) cur.fail_at(col, "rate '" + key + "' given twice");
                slot = val;
            }
            if (!f || !r) cur.fail("reaction '" + label + "' needs both kf and kr");
            const int h = vertex_of(head.composition);
            const int t = vertex_of(tail.composition);
            edges.push_back({h, t});
            labels.push_back(label);
            kf.push_back(*f);
            kr.push_back(*r);
        } else {
            cur.fail_at(kw_col, "unknown keyword '" + keyword + "'");
        }
    }
    if (species.empty()) throw ParseError(lineno + 1, 1, "no species declared");
    if (edges.empty()) throw ParseError(lineno + 1, 1, "no reactions declared");
    try {
        return ReactionNetwork::build(species, vertices, edges, Eigen::Map<const Vec>(kf.data(), Eigen::Index(kf.size())),
                                      Eigen::Map<const Vec>(kr.data(), Eigen::Index(kr.size())), labels);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(lineno + 1, 1, e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path + "'");
}

ReactionNetwork load_network(const std::string& path) { return parse_network(read_file(path)); }

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace {

std::string format_sig17(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, r.ptr);
}

}  // namespace

std::string serialize_network(const ReactionNetwork& net) {
    std::string out = "species";
    for (const auto& s : net.species()) out += " " + s;
    out += "\n";
    const IntMat& gamma = net.gamma();
    for (int e = 0; e < net.num_edges(); ++e) {
        const Edge& ed = net.edges()[static_cast<std::size_t>(e)];
        out += "reaction " + net.labels()[static_cast<std::size_t>(e)] + ": " +
               format_complex(gamma.col(ed.head), net.species()) + " <-> " +
               format_complex(gamma.col(ed.tail), net.species()) + " ; kf=" + format_sig17(net.kplus()(e)) +
               " kr=" + format_sig17(net.kminus()(e)) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scenarios

void ScenarioConfig::validate(const ReactionNetwork& net) const {
    const int n = net.num_species();
    check_length(x0, n, "x0");
    require_positive(x0, "scenario x0");
    check_length(reference, n, "reference");
    if (reference) require_positive(*reference, "scenario reference");
    check_length(x_circ, n, "x_circ");
    if (x_circ) require_positive(*x_circ, "scenario x_circ");
    check_length(state, n, "state");
    if (state) require_positive(*state, "scenario state");
    if (flux && flux->size() != net.num_edges())
        throw DimensionError("scenario: 'flux' has length " + std::to_string(flux->size()) + ", expected " +
                             std::to_string(net.num_edges()));
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("scenario: 't_end' must be positive");
    if (grid_points < 2) throw InvalidArgument("scenario: 'grid_points' must be at least 2");
    if (!(rtol > 0.0) || !(atol > 0.0) || !(tol > 0.0) || !(positivity_floor > 0.0))
        throw InvalidArgument("scenario: tolerances must be positive");
}

IntegratorOptions ScenarioConfig::integrator_options() const {
    IntegratorOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.positivity_floor = positivity_floor;
    o.output_times = uniform_grid(t_end, grid_points);
    o.reference = reference;
    return o;
}

ScenarioConfig parse_scenario(const json& j, const std::string& base_dir) {
    if (!j.is_object()) throw InvalidArgument("scenario: top level must be an object");
    static const char* known[] = {"network", "network_text", "x0",  "reference", "x_circ", "state",   "flux",
                                  "t_end",   "grid_points",  "rtol", "atol",     "positivity_floor", "tol",
                                  "schedule"};
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw InvalidArgument("scenario: unknown key '" + key + "'");
    }
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? p : (std::filesystem::path(base_dir) / fp).string();
    };
    auto number = [&](const char* key, double def) {
        if (!j.contains(key)) return def;
        if (!j[key].is_number()) throw InvalidArgument(std::string("scenario: '") + key + "' must be a number");
        return j[key].get<double>();
    };
    ScenarioConfig c;
    if (j.contains("network")) {
        if (!j["network"].is_string()) throw InvalidArgument("scenario: 'network' must be a path");
        c.network_path = resolve(j["network"].get<std::string>());
    }
    if (j.contains("network_text")) {
        if (!j["network_text"].is_string()) throw InvalidArgument("scenario: 'network_text' must be a string");
        c.network_text = j["network_text"].get<std::string>();
    }
    if (c.network_path.empty() == c.network_text.empty())
        throw InvalidArgument("scenario: exactly one of 'network' and 'network_text' is required");
    if (!j.contains("x0")) throw InvalidArgument("scenario: 'x0' is required");
    c.x0 = vec_from_json(j["x0"], "x0");
    c.reference = optional_vec(j, "reference");
    c.x_circ = optional_vec(j, "x_circ");
    c.state = optional_vec(j, "state");
    c.flux = optional_vec(j, "flux");
    c.t_end = number("t_end", c.t_end);
    const double gp = number("grid_points", c.grid_points);
    if (gp != std::floor(gp) || gp < 2 || gp > 1e8) throw InvalidArgument("scenario: 'grid_points' must be an integer >= 2");
    c.grid_points = static_cast<int>(gp);
    c.rtol = number("rtol", c.rtol);
    c.atol = number("atol", c.atol);
    c.positivity_floor = number("positivity_floor", c.positivity_floor);
    c.tol = number("tol", c.tol);
    if (j.contains("schedule")) {
        if (!j["schedule"].is_string()) throw InvalidArgument("scenario: 'schedule' must be a path");
        c.schedule_path = resolve(j["schedule"].get<std::string>());
    }
    return c;
}

Scenario load_scenario(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InvalidArgument("scenario '" + path + "': " + e.what());
    }
    const std::string base = std::filesystem::path(path).parent_path().string();
    ScenarioConfig cfg = parse_scenario(j, base.empty() ? "." : base);
    ReactionNetwork net = cfg.network_text.empty() ? load_network(cfg.network_path) : parse_network(cfg.network_text);
    cfg.validate(net);
    return Scenario{std::move(cfg), std::move(net)};
}

// ---------------------------------------------------------------------------
// Emission

std::string emit_trajectory_csv(const Trajectory& traj, const ReactionNetwork& net) {
    return emit_trajectory_csv(traj, net.species(), net.num_conserved());
}

std::string emit_trajectory_csv(const Trajectory& traj, const std::vector<std::string>& species, int num_conserved) {
    std::string out = "t";
    for (const auto& s : species) out += ",x_" + s;
    out += ",D,epr,pepr,psi,psistar";
    for (int i = 1; i <= num_conserved; ++i) out += ",eta_" + std::to_string(i);
    out += "\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const LedgerRow& row = traj.ledger[k];
        out += format_sig17(traj.times[k]);
        for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) out += "," + format_sig17(traj.states[k](i));
        for (double v : {row.divergence, row.epr, row.pepr, row.psi, row.psi_star}) out += "," + format_sig17(v);
        for (Eigen::Index i = 0; i < row.conserved.size(); ++i) out += "," + format_sig17(row.conserved(i));
        out += "\n";
    }
    return out;
}

json to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json to_json(const IntMat& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

json report_json(const HHKDecomposition& d) {
    return {
        {"kind", "hhk_decomposition"},
        {"x", to_json(d.x)},
        {"j", to_json(d.j)},
        {"f", to_json(d.f)},
        {"j_eq", to_json(d.j_eq)},
        {"j_cycle", to_json(d.j_cycle)},
        {"f_st", to_json(d.f_st)},
        {"f_eq", to_json(d.f_eq)},
        {"u_eq", to_json(d.u_eq)},
        {"coords",
         {{"eta", to_json(d.coords.eta)},
          {"v", to_json(d.coords.v)},
          {"zeta", to_json(d.coords.zeta)},
          {"z", to_json(d.coords.z)}}},
        {"certificates",
         {{"divergence_residual", d.divergence_residual},
          {"equilibrium_residual", d.equilibrium_residual},
          {"stationarity_residual", d.stationarity_residual},
          {"cycle_affinity_residual", d.cycle_affinity_residual},
          {"z_residual", d.coords.z_residual},
          {"primal_pythagoras_gap", d.primal_gap},
          {"dual_pythagoras_gap", d.dual_gap}}},
    };
}

json report_json(const EffectiveSchedule& s, const ReactionNetwork& net, const std::string& kind) {
    json rows = json::array();
    for (std::size_t i = 0; i < s.times.size(); ++i) {
        const ScheduleCertificate& c = s.certificates[i];
        json row = {{"t", s.times[i]},
                    {"K", to_json(s.bigK[i])},
                    {"kappa", to_json(s.kappa[i])},
                    {"kplus", to_json(s.kplus[i])},
                    {"kminus", to_json(s.kminus[i])},
                    {"velocity_residual", c.velocity_residual},
                    {"force_cycle_residual", c.force_cycle_residual},
                    {"steadiness_residual", c.steadiness_residual},
                    {"iterations", c.iterations}};
        if (i < s.z.size()) row["z"] = to_json(s.z[i]);
        rows.push_back(row);
    }
    json labels = json::array();
    for (const auto& l : net.labels()) labels.push_back(l);
    return {{"kind", kind},
            {"labels", labels},
            {"rows", rows},
            {"summary",
             {{"max_velocity_residual", s.max_velocity_residual()},
              {"max_force_cycle_residual", s.max_force_cycle_residual()},
              {"max_steadiness_residual", s.max_steadiness_residual()},
              {"kappa_variation", s.kappa_variation()}}}};
}

json report_json(const Classification& c) {
    return {{"kind", "classification"},
            {"label", to_string(c.label)},
            {"stoich_residual", c.stoich_residual},
            {"incidence_residual", c.incidence_residual},
            {"flux_residual", c.flux_residual}};
}

json report_json(const BirchResult& b, const PythagorasReport& p) {
    return {{"kind", "birch_point"},
            {"x_eq", to_json(b.x_eq)},
            {"lambda", to_json(b.lambda)},
            {"conservation_residual", b.conservation_residual},
            {"leaf_residual", b.leaf_residual},
            {"iterations", b.stats.iterations},
            {"pythagoras",
             {{"gap", p.gap},
              {"d_total", p.d_total},
              {"d_polytope", p.d_polytope},
              {"d_manifold", p.d_manifold}}}};
}

json report_json(const DeGiorgiReport& r) {
    return {{"kind", "degiorgi"},     {"lhs", r.lhs},           {"rhs", r.rhs},
            {"gap", r.gap},           {"tolerance", r.tolerance}, {"balanced", r.balanced},
            {"monotone", r.monotone}, {"max_increase", r.max_increase}};
}

json report_json(const LyapunovReport& r) {
    return {{"kind", "lyapunov"},
            {"max_rate", r.max_rate},
            {"violations", r.violations},
            {"threshold", r.threshold},
            {"samples", r.rates.size()},
            {"reference_cb_residual", r.reference_cb_residual},
            {"non_increasing", r.non_increasing()}};
}

json report_json(const WegscheiderReport& w) {
    return {{"is_equilibrium", w.is_equilibrium},
            {"cycle_affinity", to_json(w.cycle_affinity)},
            {"tilde_y", to_json(w.tilde_y)},
            {"f_ne", to_json(w.f_ne)}};
}

std::string emit_report_json(const json& report) { return report.dump(2) + "\n"; }

RateSchedule schedule_from_json(const json& j, int num_edges) {
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
        throw InvalidArgument("schedule: expected an object with a 'rows' array");
    RateSchedule s;
    for (const json& row : j["rows"]) {
        if (!row.contains("t") || !row["t"].is_number()) throw InvalidArgument("schedule: row without time");
        s.times.push_back(row["t"].get<double>());
        s.kplus.push_back(vec_from_json(row.value("kplus", json()), "kplus"));
        s.kminus.push_back(vec_from_json(row.value("kminus", json()), "kminus"));
    }
    s.validate(num_edges);
    return s;
}

}  // namespace dualflow

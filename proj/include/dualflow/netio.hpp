#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualflow/dynamics.hpp"
#include "dualflow/infogeo.hpp"
#include "dualflow/kinetics.hpp"
#include "dualflow/netcore.hpp"

namespace dualflow {

/// Syntax or semantic error in a network file, with a 1-based position.
class ParseError : public InvalidArgument {
public:
    ParseError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& message() const { return message_; }

private:
    int line_;
    int column_;
    std::string message_;
};

/// Parses the line-oriented network format:
///
///     species X1 X2
///     reaction r1: 0 <-> X1 ; kf=1 kr=1
///     reaction r2: 2X1 + X2 <-> 3 X1 ; kf=1 kr=0.1   # comment
///
/// The left complex is the head of the edge and kf its forward rate.
ReactionNetwork parse_network(const std::string& text);
ReactionNetwork load_network(const std::string& path);

/// Canonical text form; parse_network(serialize_network(n)) reproduces n.
std::string serialize_network(const ReactionNetwork& net);

struct ScenarioConfig {
    std::string network_path;  // resolved against the scenario's directory
    std::string network_text;  // inline alternative to network_path
    Vec x0;
    std::optional<Vec> reference;  // x̃
    std::optional<Vec> x_circ;     // x° of the KL thermodynamic function
    std::optional<Vec> state;      // evaluation point for decompose/classify
    std::optional<Vec> flux;       // flux for decompose; LMA flux when absent
    double t_end = 10.0;
    int grid_points = 201;
    double rtol = 1e-8;
    double atol = 1e-10;
    double positivity_floor = 1e-12;
    double tol = 1e-8;  // classification tolerance
    std::string schedule_path;  // tabulated rates for time-dependent simulation

    void validate(const ReactionNetwork& net) const;
    IntegratorOptions integrator_options() const;
};

struct Scenario {
    ScenarioConfig config;
    ReactionNetwork network;
};

ScenarioConfig parse_scenario(const nlohmann::json& j, const std::string& base_dir = ".");
/// Reads, resolves, and validates a scenario file together with its network.
Scenario load_scenario(const std::string& path);

/// Writes `t,x_<name>...,D,epr,pepr,psi,psistar,eta_<i>...` with 17 significant digits.
std::string emit_trajectory_csv(const Trajectory& traj, const ReactionNetwork& net);
std::string emit_trajectory_csv(const Trajectory& traj, const std::vector<std::string>& species, int num_conserved);

/// Shortest round-trip decimal form, independent of locale.
std::string format_double(double v);

nlohmann::json to_json(const Vec& v);
nlohmann::json to_json(const IntMat& m);
nlohmann::json report_json(const HHKDecomposition& d);
nlohmann::json report_json(const EffectiveSchedule& s, const ReactionNetwork& net, const std::string& kind);
nlohmann::json report_json(const Classification& c);
nlohmann::json report_json(const BirchResult& b, const PythagorasReport& p);
nlohmann::json report_json(const DeGiorgiReport& r);
nlohmann::json report_json(const LyapunovReport& r);
nlohmann::json report_json(const WegscheiderReport& w);

/// Deterministic serialization of a report.
std::string emit_report_json(const nlohmann::json& report);

/// Reads the rate table written for an effective schedule.
RateSchedule schedule_from_json(const nlohmann::json& j, int num_edges);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace dualflow

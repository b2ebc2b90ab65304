#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "potforecast/core.hpp"
#include "potforecast/errors.hpp"
#include "potforecast/game.hpp"
#include "potforecast/minimax.hpp"
#include "potforecast/potentials.hpp"
#include "potforecast/transcript_io.hpp"

namespace potforecast::cli {

// Stable exit-code contract.
inline constexpr int kOk = 0;
inline constexpr int kVerificationFailed = 1;
inline constexpr int kInvalidInput = 2;
inline constexpr int kInvariantViolation = 3;

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  f << content;
  if (!f) throw InputError("failed writing '" + path + "'");
}

// Game flags shared by simulate and sweep. Flags override spec-file fields.
struct GameFlags {
  std::string spec_file;
  std::size_t n = 0;
  std::size_t experts = 0;
  std::string loss;
  double eta = 0.0;
  double hessian_constant = 0.0;
  std::string expert_policy;
  std::string adversary;
  std::size_t depth = 0;
  std::uint64_t seed = 0;
  std::string mode;
  std::string actions;
  std::string transcript;

  CLI::Option* o_n = nullptr;
  CLI::Option* o_experts = nullptr;
  CLI::Option* o_loss = nullptr;
  CLI::Option* o_eta = nullptr;
  CLI::Option* o_c = nullptr;
  CLI::Option* o_expert_policy = nullptr;
  CLI::Option* o_adversary = nullptr;
  CLI::Option* o_depth = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_mode = nullptr;
  CLI::Option* o_actions = nullptr;
  CLI::Option* o_transcript = nullptr;

  void attach(CLI::App& app, bool with_transcript) {
    app.add_option("--spec", spec_file, "JSON run spec (strict schema); flags override its fields");
    o_n = app.add_option("--n", n, "Horizon (number of rounds)");
    o_experts = app.add_option("--experts,-N", experts, "Number of experts (actions in randomized mode)");
    o_loss = app.add_option("--loss", loss, "absolute | squared");
    o_eta = app.add_option("--eta", eta, "Learning rate (default sqrt(2 ln N))");
    o_c = app.add_option("--hessian-constant", hessian_constant, "Hessian constant c (default eta/2)");
    o_expert_policy = app.add_option("--expert-policy", expert_policy, "seeded_random | constant_grid | fixed_table");
    o_adversary = app.add_option("--adversary", adversary, "greedy | oblivious | lookahead");
    o_depth = app.add_option("--depth", depth, "Lookahead depth for the lookahead adversary");
    o_seed = app.add_option("--seed", seed, "Seed for every random choice (default 0)");
    o_mode = app.add_option("--mode", mode, "averaged | randomized");
    o_actions = app.add_option("--actions", actions, "Randomized action set: grid | nonconvex");
    if (with_transcript) o_transcript = app.add_option("--transcript", transcript, "Transcript output path");
  }

  GameConfig resolve(std::string* transcript_path) const {
    GameConfig c;
    if (!spec_file.empty()) {
      std::ifstream in(spec_file);
      if (!in) throw InputError("cannot read spec file '" + spec_file + "'");
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw InputError("spec file '" + spec_file + "': " + e.what());
      }
      if (transcript_path) {
        apply_config_json(c, j, {"transcript"});
        if (j.contains("transcript")) *transcript_path = j["transcript"].get<std::string>();
      } else {
        apply_config_json(c, j);
      }
    }
    if (o_n->count()) c.horizon = n;
    if (o_experts->count()) c.experts = experts;
    if (o_loss->count()) c.loss = LossFunction::from_name(loss);
    if (o_eta->count()) c.eta = eta;
    if (o_c->count()) c.hessian_constant = hessian_constant;
    if (o_expert_policy->count()) c.expert_policy = parse_expert_policy(expert_policy);
    if (o_adversary->count()) c.adversary = parse_adversary(adversary);
    if (o_depth->count()) c.lookahead_depth = depth;
    if (o_seed->count()) c.seed = seed;
    if (o_mode->count()) c.mode = parse_mode(mode);
    if (o_actions->count()) c.actions = parse_actions(actions);
    if (transcript_path && o_transcript && o_transcript->count()) *transcript_path = transcript;
    c.validate();
    return c;
  }
};

inline int simulate(const GameFlags& flags, std::ostream& out, std::ostream& err) {
  std::string path = "transcript.txt";
  const GameConfig config = flags.resolve(&path);
  std::ostringstream buffer;
  GameTranscript t;
  {
    TranscriptWriter writer(buffer, config);
    RunOptions opt;
    opt.keep_rounds = false;
    opt.on_round = [&](const RoundRecord& r) { writer.write(r); };
    opt.on_randomized_round = [&](const RandomizedRound& r) { writer.write(r); };
    t = run_game(config, opt);
  }
  write_file(path, buffer.str());
  out << "regret=" << format_double(t.final_regret) << " bound=" << format_double(t.bound_value)
      << " satisfied=" << (t.bound_satisfied ? "true" : "false") << '\n';
  if (t.violation) {
    err << "invariant violation at round " << t.violation->round << ": " << t.violation->message << '\n';
    return kInvariantViolation;
  }
  return t.bound_satisfied ? kOk : kVerificationFailed;
}

struct VerifyFlags {
  std::string kind = "exponential";
  std::size_t experts = 2;
  double eta = 0.0;
  double hessian_constant = 0.0;
  std::size_t samples = 100;
  std::size_t grid = 0;
  bool sampled_h = false;
  std::size_t directions = 4096;
  std::uint64_t seed = 0;
  CLI::Option* o_eta = nullptr;
  CLI::Option* o_c = nullptr;
};

inline int verify_potential(const VerifyFlags& f, std::ostream& out) {
  if (f.experts == 0) throw InputError("--experts must be at least 1");
  if (f.samples == 0) throw InputError("--samples must be at least 1");
  const double eta = f.o_eta->count() ? f.eta : default_eta(f.experts);
  Potential P = f.kind == "exponential" ? Potential::exponential(eta)
                : f.kind == "composite" ? Potential::exponential_as_composite(eta)
                                        : throw InputError("unknown potential kind '" + f.kind + "'");
  if (f.o_c->count()) P = P.with_hessian_constant(f.hessian_constant);
  CertifyOptions opt;
  opt.sampled_directions = f.sampled_h;
  opt.direction_samples = f.directions;
  opt.seed = f.seed;
  const auto points = normal_samples(f.samples, f.experts, f.seed);
  const SupersolutionReport r = certify_supersolution(P, points, f.grid, opt);
  out << "kind=" << f.kind << '\n'
      << "experts=" << f.experts << '\n'
      << "eta=" << format_double(eta) << '\n'
      << "hessian_constant=" << format_double(P.hessian_constant()) << '\n'
      << "points_checked=" << r.points_checked << '\n'
      << "max_domination_violation=" << format_double(r.max_domination_violation) << '\n'
      << "max_hessian_excess=" << format_double(r.max_hessian_excess) << '\n'
      << "gradient_check_max_relerror=" << format_double(r.gradient_check_max_relerror) << '\n'
      << "min_gradient_component=" << format_double(r.min_gradient_component) << '\n'
      << "passed=" << (r.passed ? "true" : "false") << '\n';
  return r.passed ? kOk : kVerificationFailed;
}

struct MinimaxFlags {
  std::size_t n = 4;
  std::size_t experts = 2;
  std::string advice_grid = "0,1/2,1";
  std::string outcomes = "0,1";
  int resolution = 20;
  std::string loss = "absolute";
  double eta = 0.0;
  std::string table;
  CLI::Option* o_eta = nullptr;
};

inline int minimax(const MinimaxFlags& f, std::ostream& out) {
  DiscreteGameSpec spec;
  spec.horizon = f.n;
  spec.experts = f.experts;
  spec.advice_grid.clear();
  for (const auto& s : split_list(f.advice_grid)) spec.advice_grid.push_back(parse_rational(s));
  spec.outcomes.clear();
  for (const auto& s : split_list(f.outcomes)) spec.outcomes.push_back(parse_rational(s));
  spec.simplex_resolution = f.resolution;
  spec.loss = LossFunction::from_name(f.loss).kind();
  spec.validate();
  const double eta = f.o_eta->count() ? f.eta : default_eta(f.experts);
  const BoundAudit audit = bound_audit(spec, Potential::exponential(eta));
  out << "minimax_value=" << format_double(audit.minimax_value) << '\n'
      << "strategy_value=" << format_double(audit.strategy_value) << '\n'
      << "potential_bound=" << format_double(audit.potential_bound) << '\n'
      << "states_expanded=" << audit.states_expanded << '\n'
      << "chain=" << format_double(audit.minimax_value) << " <= " << format_double(audit.strategy_value)
      << " <= " << format_double(audit.potential_bound) << ' ' << (audit.holds() ? "holds" : "violated") << '\n';
  if (!f.table.empty()) {
    MinimaxSolver solver(spec);
    solver.value(0);
    std::ostringstream buf;
    write_value_table(buf, solver);
    write_file(f.table, buf.str());
  }
  return audit.holds() ? kOk : kVerificationFailed;
}

struct SweepFlags {
  std::string param;
  std::string values;
};

inline int sweep_cmd(const SweepFlags& s, const GameFlags& g, std::ostream& out) {
  const SweepParameter which = parse_sweep_parameter(s.param);
  std::vector<double> values;
  for (const auto& v : split_list(s.values)) values.push_back(parse_double(v));
  if (values.empty()) throw InputError("--values must list at least one value");
  const GameConfig base = g.resolve(nullptr);
  const auto rows = sweep(base, which, values);
  std::ostringstream buf;
  buf << "param,regret,bound\n";
  for (const auto& r : rows)
    buf << format_double(r.param) << ',' << format_double(r.regret) << ',' << format_double(r.bound) << '\n';
  out << buf.str();
  return kOk;
}

}  // namespace detail

/// Entry point; args exclude the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Potential-based forecasting with expert advice", "potforecast"};
  app.require_subcommand(1);

  detail::GameFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "Play a game and audit the regret bound");
  sim_flags.attach(*sim, true);

  detail::VerifyFlags vf;
  auto* ver = app.add_subcommand("verify-potential", "Numerically certify the potential conditions");
  ver->add_option("--kind", vf.kind, "exponential | composite");
  ver->add_option("--experts,-N", vf.experts, "Dimension N");
  vf.o_eta = ver->add_option("--eta", vf.eta, "Learning rate (default sqrt(2 ln N))");
  vf.o_c = ver->add_option("--hessian-constant", vf.hessian_constant, "Claimed constant c (default eta/2)");
  ver->add_option("--samples", vf.samples, "Standard-normal sample points");
  ver->add_option("--grid", vf.grid, "Grid points per axis over [-3,3]^N (0 = none)");
  ver->add_flag("--sampled-h", vf.sampled_h, "Random sign directions instead of the full vertex scan");
  ver->add_option("--directions", vf.directions, "Number of sampled directions");
  ver->add_option("--seed", vf.seed, "Seed");

  detail::MinimaxFlags mf;
  auto* mm = app.add_subcommand("minimax", "Exact desk-scale minimax value and bound chain");
  mm->add_option("--n", mf.n, "Horizon (<= 6)");
  mm->add_option("--experts,-N", mf.experts, "Experts (<= 3)");
  mm->add_option("--advice-grid", mf.advice_grid, "Comma-separated rationals in [0,1]");
  mm->add_option("--outcomes", mf.outcomes, "Comma-separated rationals in [0,1]");
  mm->add_option("--resolution", mf.resolution, "Simplex grid step 1/resolution (<= 20)");
  mm->add_option("--loss", mf.loss, "absolute | squared");
  mf.o_eta = mm->add_option("--eta", mf.eta, "Learning rate of the audited potential");
  mm->add_option("--table", mf.table, "Write the value table (t,x_1..x_N,value) here");

  detail::SweepFlags sf;
  detail::GameFlags sweep_game;
  auto* sw = app.add_subcommand("sweep", "Run one game per parameter value; CSV to stdout");
  sw->add_option("--param", sf.param, "eta | experts | horizon")->required();
  sw->add_option("--values", sf.values, "Comma-separated values")->required();
  sweep_game.attach(*sw, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (*sim) return detail::simulate(sim_flags, out, err);
    if (*ver) return detail::verify_potential(vf, out);
    if (*mm) return detail::minimax(mf, out);
    if (*sw) return detail::sweep_cmd(sf, sweep_game, out);
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what() << " (required budget " << format_double(e.required()) << ")\n";
    return kInvalidInput;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kInvariantViolation;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const SequencingError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace potforecast::cli

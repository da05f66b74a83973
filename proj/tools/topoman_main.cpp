/*
 * Copyright (c) The TopoMan Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "topoman/experiment.hpp"

namespace {

using namespace topoman;

TopologyFamily need_family(const std::string& name) {
  auto family = family_from_string(name);
  if (!family) throw CLI::ValidationError("--family", "unknown family " + name);
  return *family;
}

NetworkInstance load_or_generate(const std::string& config,
                                 const std::string& family, int nodes,
                                 std::uint64_t gen_seed, int fanout) {
  if (!config.empty()) return parse_network_config_file(config);
  GeneratorOptions opts;
  opts.tree_fanout = fanout;
  return generate_topology(need_family(family), nodes, gen_seed, opts);
}

int cmd_gen(const std::string& family, int nodes, std::uint64_t seed,
            int fanout, const std::string& out_path,
            const std::string& policy_out) {
  GeneratorOptions opts;
  opts.tree_fanout = fanout;
  NetworkInstance net = generate_topology(need_family(family), nodes, seed, opts);
  const std::string text = serialize_network_config(net);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << "\n";
      return 1;
    }
    out << text;
  }
  if (!policy_out.empty()) {
    std::ofstream out(policy_out);
    if (!out) {
      std::cerr << "cannot write " << policy_out << "\n";
      return 1;
    }
    out << serialize_policy_config(net.policies);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topoman: probe-based middlebox topology discovery simulator"};
  app.require_subcommand(1);

  // --- gen -------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "generate a network configuration");
  std::string gen_family = "cisco";
  int gen_nodes = 20;
  std::uint64_t gen_seed = 1;
  int gen_fanout = 3;
  std::string gen_out = "-";
  std::string gen_policy_out;
  gen->add_option("--family", gen_family, "cisco|inline_offline|tree|full_mesh");
  gen->add_option("--nodes", gen_nodes, "middlebox count")->check(CLI::Range(2, 100000));
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--fanout", gen_fanout, "tree fanout");
  gen->add_option("--out", gen_out, "output file ('-' = stdout)");
  gen->add_option("--policy-out", gen_policy_out, "write the policy file here");

  // --- discover -----------------------------------------------------------
  auto* discover = app.add_subcommand("discover", "run one discovery round");
  std::string d_config, d_family = "cisco", d_policy, d_heuristic = "edge";
  std::string d_transcript;
  int d_nodes = 20, d_fanout = 3;
  std::uint64_t d_seed = 1, d_gen_seed = 1;
  bool d_append = false, d_no_append = false, d_hdr = false, d_pay = false;
  std::uint32_t d_ttl = kDefaultTtlMax;
  discover->add_option("--config", d_config, "network configuration file");
  discover->add_option("--family", d_family, "generate this family instead");
  discover->add_option("--nodes", d_nodes, "middlebox count");
  discover->add_option("--gen-seed", d_gen_seed, "generator seed");
  discover->add_option("--fanout", d_fanout, "tree fanout");
  discover->add_option("--policy", d_policy, "policy configuration file");
  discover->add_option("--heuristic", d_heuristic, "edge|policy|random");
  discover->add_option("--seed", d_seed, "run seed");
  discover->add_flag("--append", d_append, "payload-append mode");
  discover->add_flag("--no-append", d_no_append, "per-hop up-call mode");
  discover->add_flag("--header-sec", d_hdr, "hide probe pairs behind tokens");
  discover->add_flag("--payload-sec", d_pay, "seal probe payloads");
  discover->add_option("--ttl-max", d_ttl, "probe TTL threshold");
  discover->add_option("--transcript", d_transcript,
                       "write the event transcript here ('-' = stdout)");

  // --- verify-path -----------------------------------------------------------
  auto* vpath = app.add_subcommand("verify-path", "check a configured path");
  std::string v_config, v_family = "tree", v_path;
  int v_nodes = 20, v_fanout = 3;
  std::uint64_t v_gen_seed = 1, v_seed = 1;
  std::uint32_t v_path_id = 1;
  vpath->add_option("--config", v_config, "network configuration file");
  vpath->add_option("--family", v_family, "generate this family instead");
  vpath->add_option("--nodes", v_nodes, "middlebox count");
  vpath->add_option("--gen-seed", v_gen_seed, "generator seed");
  vpath->add_option("--fanout", v_fanout, "tree fanout");
  vpath->add_option("--path", v_path, "comma-separated device list")->required();
  vpath->add_option("--path-id", v_path_id, "path id (> 0)");
  vpath->add_option("--seed", v_seed, "run seed");

  // --- suite --------------------------------------------------------------------
  auto* suite = app.add_subcommand("suite", "sweep families, modes and seeds");
  std::string s_families = "cisco,inline_offline,tree,full_mesh";
  std::string s_heuristics = "edge,random";
  std::string s_append = "both";
  std::string s_out = "-";
  int s_nodes = 20, s_fanout = 3;
  int s_seeds = 30;
  std::uint64_t s_seed_base = 1;
  bool s_hdr = false, s_pay = false;
  std::uint32_t s_ttl = kDefaultTtlMax;
  suite->add_option("--family", s_families, "comma-separated family list");
  suite->add_option("--nodes", s_nodes, "middlebox count");
  suite->add_option("--seeds", s_seeds, "number of seeds")->check(CLI::Range(1, 10000));
  suite->add_option("--seed-base", s_seed_base, "first seed value");
  suite->add_option("--heuristic", s_heuristics, "comma list of edge|policy|random");
  suite->add_option("--append-modes", s_append, "on|off|both");
  suite->add_flag("--header-sec", s_hdr, "hide probe pairs behind tokens");
  suite->add_flag("--payload-sec", s_pay, "seal probe payloads");
  suite->add_option("--ttl-max", s_ttl, "probe TTL threshold");
  suite->add_option("--fanout", s_fanout, "tree fanout");
  suite->add_option("--out", s_out, "CSV output file ('-' = stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen(gen_family, gen_nodes, gen_seed, gen_fanout, gen_out,
                     gen_policy_out);

    if (discover->parsed()) {
      NetworkInstance net =
          load_or_generate(d_config, d_family, d_nodes, d_gen_seed, d_fanout);
      if (!d_policy.empty()) net.policies = parse_policy_config_file(d_policy);
      auto choice = selection_from_string(d_heuristic);
      if (!choice) {
        std::cerr << "unknown heuristic " << d_heuristic << "\n";
        return 2;
      }
      RunMode mode;
      mode.selection = choice->mode;
      mode.heuristic = choice->heuristic;
      mode.payload_append = d_append && !d_no_append;
      mode.header_sec = d_hdr;
      mode.payload_sec = d_pay;
      mode.ttl_max = d_ttl;

      std::ostringstream transcript;
      std::ostream* tr = d_transcript.empty() ? nullptr : &transcript;
      SingleRun run = run_single(net, mode, d_seed, tr);
      if (!d_transcript.empty()) {
        if (d_transcript == "-") {
          std::cout << transcript.str();
        } else {
          std::ofstream out(d_transcript);
          out << transcript.str();
        }
      }
      std::cout << "family=" << net.family << " nodes=" << net.middleboxes.size()
                << " seed=" << d_seed << "\n"
                << "probe_triggers=" << run.metrics.probe_triggers
                << " up_calls=" << run.metrics.up_calls
                << " sim_ticks=" << run.metrics.sim_ticks << "\n"
                << "residual_interfaces=" << run.discovery_report.residual.size()
                << " missing_after_injection=" << run.final_diff.missing_links.size()
                << " extra_links=" << run.final_diff.extra_links.size() << "\n"
                << "clean=" << (run.clean ? "yes" : "no") << "\n";
      return run.clean ? 0 : 3;
    }

    if (vpath->parsed()) {
      NetworkInstance net =
          load_or_generate(v_config, v_family, v_nodes, v_gen_seed, v_fanout);
      PathSpec spec;
      spec.path_id = v_path_id;
      std::stringstream nodes(v_path);
      std::string node;
      while (std::getline(nodes, node, ',')) spec.nodes.push_back(node);
      RunMode mode;
      Simulation sim(net, mode, v_seed);
      PathResult result = sim.run_path_verification(spec);
      if (result.ok) {
        std::cout << "PathOk:";
        for (const auto& hop : result.trace) std::cout << " " << hop;
        std::cout << "\n";
        return 0;
      }
      std::cout << "PathFail: failed_at=" << result.failed_at << " last_good="
                << (result.last_good ? *result.last_good : "(none)") << "\n";
      return 3;
    }

    if (suite->parsed()) {
      ExperimentSpec spec;
      std::stringstream fams(s_families);
      std::string item;
      while (std::getline(fams, item, ','))
        spec.families.push_back(need_family(item));
      spec.nodes = s_nodes;
      for (int i = 0; i < s_seeds; ++i)
        spec.seeds.push_back(s_seed_base + static_cast<std::uint64_t>(i));
      std::stringstream heur(s_heuristics);
      while (std::getline(heur, item, ',')) {
        auto choice = selection_from_string(item);
        if (!choice) {
          std::cerr << "unknown heuristic " << item << "\n";
          return 2;
        }
        spec.selections.push_back(*choice);
      }
      if (s_append == "both")
        spec.append_modes = {false, true};
      else if (s_append == "on")
        spec.append_modes = {true};
      else
        spec.append_modes = {false};
      spec.header_sec = s_hdr;
      spec.payload_sec = s_pay;
      spec.ttl_max = s_ttl;
      spec.tree_fanout = s_fanout;

      SuiteResult result = run_suite(spec);
      const std::string csv = suite_csv(result);
      if (s_out.empty() || s_out == "-") {
        std::cout << csv;
      } else {
        std::ofstream out(s_out);
        if (!out) {
          std::cerr << "cannot write " << s_out << "\n";
          return 1;
        }
        out << csv;
      }
      std::cerr << "suite wall clock: " << result.wall_clock_seconds << " s\n";
      return result.all_clean ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

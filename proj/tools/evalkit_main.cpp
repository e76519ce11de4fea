// evalkit: synthetic dialogue generation and position-swapped pairwise judging.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "acn/core/error.h"
#include "acn/core/io.h"
#include "acn/core/text.h"
#include "acn/evalkit/evalkit.h"

using namespace acn;
using namespace acn::evalkit;

namespace {

// "Positive=0.5,Neutral=0.3,Negative=0.2"
AttitudeProbs parse_probs(const std::string& s) {
  AttitudeProbs probs;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "bad attitude weight '" + item + "'");
    probs[attitude_from_string(text::trim(item.substr(0, eq)))] = std::stod(item.substr(eq + 1));
  }
  return probs;
}

int run_generate(const std::string& taxonomy_path, std::uint64_t seed, std::size_t sessions, const std::string& turns,
                 const std::string& attitudes, const std::string& provider, const std::string& out) {
  const auto taxonomy = load_taxonomy(taxonomy_path);
  const auto [lo, hi] = parse_turn_range(turns);
  const auto probs = attitudes.empty() ? uniform_attitudes() : parse_probs(attitudes);
  auto chat = make_eval_chat(provider);
  const auto generated = generate_sessions(taxonomy, seed, {sessions, lo, hi}, probs, *chat);
  std::vector<json> rows;
  for (const auto& s : generated) rows.push_back(to_json(s));
  write_jsonl(out, rows);
  std::cout << "wrote " << rows.size() << " sessions to " << out << "\n";
  return 0;
}

int run_judge(const std::string& pairs_path, const std::string& criteria, const std::string& provider,
              const std::string& out) {
  const auto crit = parse_criteria(criteria);
  auto judge = make_eval_chat(provider);
  std::vector<json> rows;
  for (const auto& row : read_jsonl(pairs_path)) {
    for (const auto& j : judge_pairs(pair_from_json(row), crit, *judge)) rows.push_back(to_json(j));
  }
  write_jsonl(out, rows);
  std::cout << "wrote " << rows.size() << " judgments to " << out << "\n";
  return 0;
}

int run_tally(const std::string& in, const std::string& out, const std::string& radar) {
  std::vector<PairJudgment> judgments;
  for (const auto& row : read_jsonl(in)) judgments.push_back(judgment_from_json(row));
  const auto report = tally(std::move(judgments));
  io::write_atomic(out, to_json(report).dump(2) + "\n");
  if (!radar.empty()) io::write_atomic(radar, radar_series(report).dump(2) + "\n");
  std::cout << "wrote " << report.buckets.size() << " buckets to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dataset generation and pairwise evaluation"};
  app.require_subcommand(1);

  std::string taxonomy;
  std::uint64_t seed = 0;
  std::size_t sessions = 1;
  std::string turns = "1..1";
  std::string attitudes;
  std::string gen_provider = "template";
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Generate synthetic multi-turn sessions");
  gen->add_option("--taxonomy", taxonomy, "Taxonomy JSON file")->required()->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("--sessions", sessions, "Number of sessions")->required();
  gen->add_option("--turns", turns, "Turn count range MIN..MAX")->required();
  gen->add_option("--attitudes", attitudes, "Weights, e.g. Positive=0.5,Neutral=0.3,Negative=0.2");
  gen->add_option("--provider", gen_provider, "template, scripted:<file> or http:<endpoint>");
  gen->add_option("--out", gen_out, "Output JSONL")->required();

  std::string pairs;
  std::string criteria = "all";
  std::string judge_provider = "heuristic";
  std::string judge_out;
  auto* jud = app.add_subcommand("judge", "Judge response pairs in both orders");
  jud->add_option("--pairs", pairs, "Pairs JSONL")->required()->check(CLI::ExistingFile);
  jud->add_option("--criteria", criteria, "Comma-separated criteria or 'all'");
  jud->add_option("--provider", judge_provider, "heuristic, scripted:<file> or http:<endpoint>");
  jud->add_option("--out", judge_out, "Output JSONL")->required();

  std::string tax_out;
  auto* tax = app.add_subcommand("taxonomy", "Write the built-in topic taxonomy");
  tax->add_option("--out", tax_out, "Output JSON")->required();

  std::string tally_in;
  std::string tally_out;
  std::string radar;
  auto* tal = app.add_subcommand("tally", "Win/tie/loss and adjusted win rates");
  tal->add_option("--in", tally_in, "Judgments JSONL")->required()->check(CLI::ExistingFile);
  tal->add_option("--out", tally_out, "Report JSON")->required();
  tal->add_option("--radar", radar, "Also write radar-chart series JSON");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_generate(taxonomy, seed, sessions, turns, attitudes, gen_provider, gen_out);
    if (*jud) return run_judge(pairs, criteria, judge_provider, judge_out);
    if (*tal) return run_tally(tally_in, tally_out, radar);
    if (*tax) {
      io::write_atomic(tax_out, to_json(default_taxonomy()).dump(2) + "\n");
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

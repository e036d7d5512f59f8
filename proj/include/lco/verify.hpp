#pragma once

// Self-check suites behind `lco-lab verify`. Each suite draws seeded random
// cases and counts how many satisfy a property of the library.

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "lco/objectives.hpp"

namespace lco {

/// The loss implementations the gradient suite checks. Swapping one entry
/// for a deliberately broken version lets tests confirm the suite notices.
struct ObjectiveTable {
  std::function<LossEval(const LogitVector&, ActionIndex)> sft = sft_eval;
  std::function<LossEval(const TimestepContext&, const LogitVector&)> ppo = ppo_eval;
  std::function<LossEval(const TimestepContext&, const LogitVector&)> reinforce = reinforce_eval;
  std::function<LossEval(const LogitVector&, const LogitVector&)> mse = lco_mse_eval;
  std::function<LossEval(const LogitVector&, const LogitVector&)> lch = lco_lch_eval;
  std::function<LossEval(const LogitVector&, const ProbVector&)> kld = lco_kld_eval;
};

struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;  // first few failure descriptions
  double seconds = 0.0;

  bool ok() const { return failed == 0 && passed > 0; }
};

const std::vector<std::string>& suite_names();

/// Suites whose name equals filter or starts with filter followed by '-'.
/// Empty result means the filter matched nothing.
std::vector<std::string> select_suites(std::optional<std::string_view> filter);

SuiteResult run_suite(const std::string& name, const ObjectiveTable& table = {});

/// Runs the selected suites concurrently and reports them in catalog order.
std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, const ObjectiveTable& table = {},
                                    bool parallel = true);

void print_report(std::ostream& out, const std::vector<SuiteResult>& results);

}  // namespace lco

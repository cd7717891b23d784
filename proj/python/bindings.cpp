// Copyright 2026 The confkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "confkit/align.hpp"
#include "confkit/calibrate.hpp"
#include "confkit/cli.hpp"
#include "confkit/error.hpp"
#include "confkit/json_io.hpp"
#include "confkit/metrics.hpp"
#include "confkit/pipeline.hpp"
#include "confkit/simulate.hpp"

namespace py = pybind11;
using namespace confkit;

namespace {

ScoredSet scored(const std::vector<double>& scores, const std::vector<int>& labels) {
  return ScoredSet{scores, labels};
}

std::string report_json(const std::vector<double>& scores, const std::vector<int>& labels, int bins) {
  return dump_json(to_json(compute_report(scored(scores, labels), bins)));
}

}  // namespace

PYBIND11_MODULE(_confkit, m) {
  m.doc() = "confkit core bindings";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("auc_pr", [](const std::vector<double>& s, const std::vector<int>& l) { return auc_pr(scored(s, l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("eer", [](const std::vector<double>& s, const std::vector<int>& l) { return eer(scored(s, l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("nce", [](const std::vector<double>& s, const std::vector<int>& l) { return nce(scored(s, l)); },
        py::arg("scores"), py::arg("labels"));
  m.def("ece", [](const std::vector<double>& s, const std::vector<int>& l, int bins) { return ece(scored(s, l), bins); },
        py::arg("scores"), py::arg("labels"), py::arg("bins") = 50);
  m.def("metrics_report_json", &report_json, py::arg("scores"), py::arg("labels"), py::arg("bins") = 50);

  m.def("edit_distance",
        [](const std::vector<int>& hyp, const std::vector<int>& ref) { return levenshtein(hyp, ref).distance; },
        py::arg("hyp"), py::arg("ref"));

  m.def(
      "fit_pwlm",
      [](const std::vector<double>& s, const std::vector<int>& l, int segments, int bins) {
        const PwlMapping p = fit_pwlm(scored(s, l), segments, bins);
        return std::make_pair(p.breakpoints, p.values);
      },
      py::arg("scores"), py::arg("labels"), py::arg("segments") = 5, py::arg("bins") = 50,
      "Returns (breakpoints, values).");
  m.def(
      "apply_pwlm",
      [](const std::vector<double>& breakpoints, const std::vector<double>& values, const std::vector<double>& s) {
        PwlMapping p{breakpoints, values};
        validate(p);
        return apply_pwlm(p, s);
      },
      py::arg("breakpoints"), py::arg("values"), py::arg("scores"));

  m.def(
      "run_scenario",
      [](const std::string& scenario_json, const std::string& out_dir) {
        std::vector<std::string> out;
        for (const auto& p : run_scenario(scenario_from_json(json::parse(scenario_json)), out_dir)) {
          out.push_back(p.string());
        }
        return out;
      },
      py::arg("scenario_json"), py::arg("out_dir"), "Writes the scenario's corpora and texts; returns the paths.");
  m.def(
      "run_experiment",
      [](const std::string& plan_path, const std::string& out_dir) {
        const std::filesystem::path p(plan_path);
        AblationResult r;
        {
          py::gil_scoped_release release;
          r = run_ablation(plan_from_json(parse_json_file(p), p.parent_path()));
          write_results(r, out_dir);
        }
        return dump_json(to_json(r));
      },
      py::arg("plan_path"), py::arg("out_dir"), "Runs the ablation grid; returns the grid JSON text.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}

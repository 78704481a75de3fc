#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "prodform/io.hpp"
#include "prodform/spectral.hpp"

using namespace prodform;

namespace {

Json breakdown_doc() {
  return Json{{"family", "mxmc-breakdown"},
              {"params", Json{{"c", 2},
                              {"lambda", 0.5},
                              {"mu", 1.0},
                              {"theta", 0.2},
                              {"nu", 1.0}}}};
}

Json raw_doc_with_pool() {
  return Json::parse(R"({
    "family": "raw",
    "c": 1,
    "K": 1,
    "planes": [
      {"a": {"0": 2.0}, "b": {"1": 0.3}, "c": {"1": 0.3}, "d": {"-1": 1.0}}
    ],
    "boundary": {
      "v_states": ["empty"],
      "entries": [{"from": 0, "n0": 0, "mask": 1, "rate": 2.0}],
      "routes": [
        {"n0": 0, "mask": 1, "plane": 0, "kind": "d", "jump": -1, "to": 0}
      ]
    }
  })");
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char ch : s)
    if (ch == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("preset documents parse to the same spec as the preset builders") {
  ProcessSpec fromdoc = parse_model_document(breakdown_doc());
  ProcessSpec direct = preset_mxmc_breakdown(2, {0.5}, 1.0, 0.2, 1.0);

  CHECK(fromdoc.c == direct.c);
  CHECK(fromdoc.K == direct.K);
  REQUIRE(fromdoc.planes.size() == direct.planes.size());
  for (size_t i = 0; i < direct.planes.size(); ++i)
    CHECK(fromdoc.planes[i] == direct.planes[i]);
  CHECK(fromdoc.boundary.v_states == direct.boundary.v_states);
  CHECK(fromdoc.symmetric == direct.symmetric);
  REQUIRE(fromdoc.preset.has_value());
  CHECK(fromdoc.preset->family == "mxmc-breakdown");

  // Per-server parameters broadcast from scalars or parse as arrays.
  Json hyp = Json{{"family", "hypo2-batch"},
                  {"params", Json{{"c", 2},
                                  {"lambda", Json::array({0.3, 0.3})},
                                  {"mu1", 2.0},
                                  {"mu2", Json::array({3.0, 3.0})}}}};
  ProcessSpec hspec = parse_model_document(hyp);
  CHECK(hspec.K == 2);
  CHECK(hspec.symmetric);
  CHECK(hspec.planes[0] == preset_hypo2_batch(2, {0.3, 0.3}, {2.0, 2.0},
                                              {3.0, 3.0}).planes[0]);
}

TEST_CASE("raw documents parse planes, jumps, and the boundary pool") {
  ProcessSpec spec = parse_model_document(raw_doc_with_pool());
  CHECK(spec.c == 1);
  CHECK(spec.K == 1);
  REQUIRE(spec.planes.size() == 1);
  CHECK(spec.planes[0].a(0) == 2.0);
  CHECK(spec.planes[0].b(1) == 0.3);
  CHECK(spec.planes[0].d(-1) == 1.0);
  CHECK(spec.planes[0].max_down() == 1);
  REQUIRE(spec.boundary.size() == 1);
  CHECK(spec.boundary.v_states[0] == "empty");
  REQUIRE(spec.boundary.entries.size() == 1);
  CHECK(spec.boundary.entries[0].rate == 2.0);
  CHECK(spec.boundary.entries[0].to == WState{0, 1});
  REQUIRE(spec.boundary.routes.size() == 1);
  CHECK(spec.boundary.routes[0].kind == RateKind::D);
  CHECK(spec.boundary.routes[0].jump == -1);
  CHECK(!spec.preset.has_value());

  // Without the boundary block the pool is empty (clip semantics).
  Json noclip = raw_doc_with_pool();
  noclip.erase("boundary");
  ProcessSpec clip = parse_model_document(noclip);
  CHECK(clip.boundary.empty());
}

TEST_CASE("malformed documents are rejected with BadParams") {
  CHECK_THROWS_AS(parse_model_document(Json::array()), BadParams);
  CHECK_THROWS_AS(parse_model_document(Json{{"params", Json::object()}}),
                  BadParams);
  CHECK_THROWS_AS(
      parse_model_document(Json{{"family", "no-such-family"},
                                {"params", Json::object()}}),
      BadParams);

  // erlang2-hetero takes exactly one arrival rate.
  Json e2 = Json{{"family", "erlang2-hetero"},
                 {"params", Json{{"c", 2},
                                 {"lambda", Json::array({0.5, 0.5})},
                                 {"mu", Json::array({1.5, 2.5})}}}};
  CHECK_THROWS_AS(parse_model_document(e2), BadParams);

  // Wrong per-server array length.
  Json badmu = breakdown_doc();
  badmu["params"]["mu"] = Json::array({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(parse_model_document(badmu), BadParams);

  // Raw-document problems: bad jump key, bad kind, missing planes.
  Json badjump = raw_doc_with_pool();
  badjump["planes"][0]["a"] = Json{{"zero", 2.0}};
  CHECK_THROWS_AS(parse_model_document(badjump), BadParams);

  Json badkind = raw_doc_with_pool();
  badkind["boundary"]["routes"][0]["kind"] = "q";
  CHECK_THROWS_AS(parse_model_document(badkind), BadParams);

  Json noplanes = Json{{"family", "raw"}, {"c", 1}, {"K", 1}};
  CHECK_THROWS_AS(parse_model_document(noplanes), BadParams);
}

TEST_CASE("model files load or fail loudly") {
  namespace fs = std::filesystem;
  CHECK_THROWS_AS(load_model_file("/no/such/path.json"), BadParams);

  fs::path dir = fs::temp_directory_path() / "prodform_io_test";
  fs::create_directories(dir);

  std::ofstream bad(dir / "bad.json");
  bad << "{ not json";
  bad.close();
  CHECK_THROWS_AS(load_model_file((dir / "bad.json").string()), BadParams);

  std::ofstream good(dir / "good.json");
  good << breakdown_doc().dump();
  good.close();
  ProcessSpec spec = load_model_file((dir / "good.json").string());
  CHECK(spec.boundary.size() == 12);
  fs::remove_all(dir);
}

TEST_CASE("reports serialize with stable keys") {
  ProcessSpec spec = parse_model_document(breakdown_doc());
  GeneratingFunctions gf = generating_functions(spec);

  Json erg = ergodicity_to_json(check_ergodicity(gf));
  CHECK(erg["ergodic"] == true);
  CHECK(erg["at_boundary"] == false);
  CHECK(std::abs(erg["drift"].get<double>() - 7.0 / 6.0) < 1e-12);
  CHECK(erg["per_plane"].size() == 2);
  CHECK(erg.contains("symmetric_drift"));

  ProductBasis basis = build_basis(spec, gf);
  Json jb = basis_to_json(basis);
  CHECK(jb["expected_forms"] == 4);  // 2^c K
  CHECK(jb["form_count"] == 4);
  CHECK(jb["degenerate"] == false);
  CHECK(jb["unique_beta0"].size() == 3);  // K (c+1)
  CHECK(jb["rows"].size() == 4);

  EquilibriumSolution sol = solve_equilibrium(spec);
  Json js = solution_to_json(sol, 5);
  CHECK(js["c"] == 2);
  CHECK(std::abs(js["normalization"].get<double>() - 1.0) < 1e-9);
  CHECK(js["v_probs"].size() == 12);
  CHECK(js["forms"].size() == 4);
  CHECK(js.contains("aggregated"));
  // Interior dump: levels 0..5 for every mask.
  CHECK(js["forms"][0].contains("alpha"));
  CHECK(js["p"].size() == 6 * 4);

  LevelMatrices lm = level_matrices(spec);
  WaitingTimeMixture mix = waiting_time_mixture(sol, lm);
  Json jm = mixture_to_json(mix);
  CHECK(jm["terms"].size() == 3);
  CHECK(std::abs(jm["strip_mass"].get<double>() - 0.159727217307746) < 1e-9);
  CHECK(jm["terms"][0]["rate"].contains("re"));
}

TEST_CASE("the root table prints sign groups and two-decimal values") {
  ProcessSpec spec = preset_hypo2_batch(2, {0.0, 1.0}, {6.0, 6.0}, {2.0, 2.0});
  GeneratingFunctions gf = generating_functions(spec);
  ProductBasis basis = build_basis(spec, gf);
  std::string table = roots_table(basis);

  CHECK(table.find("x1") != std::string::npos);
  CHECK(table.find("x2") != std::string::npos);
  CHECK(table.find("beta0") != std::string::npos);
  CHECK(table.find("0.74") != std::string::npos);
  CHECK(table.find("3.77") != std::string::npos);
  CHECK(table.find("-0.33") != std::string::npos);
  CHECK(table.find("-3.00") != std::string::npos);
  CHECK(table.find("7.24") != std::string::npos);
  CHECK(table.find("-2.48") != std::string::npos);
  // Header plus nine data rows.
  CHECK(count_lines(table) == 10);
}

TEST_CASE("csv emitters produce one row per grid point") {
  ProcessSpec spec = parse_model_document(breakdown_doc());
  EquilibriumSolution sol = solve_equilibrium(spec);

  std::string csv = p_table_csv(sol, 10);
  CHECK(csv.rfind("n0,m,p", 0) == 0);
  CHECK(count_lines(csv) == 1 + 11 * 3);  // header + levels 0..10 x m 0..2

  // Spot-check one row against the evaluator.
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);  // n0=0, m=0
  double p00 = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(p00 == doctest::Approx(evaluate_p_aggregated(sol, 0, 0)).epsilon(1e-9));

  LevelMatrices lm = level_matrices(spec);
  WaitingTimeMixture mix = waiting_time_mixture(sol, lm);
  std::string wcsv = waiting_csv(mix, {0.0, 0.5, 1.0});
  CHECK(wcsv.rfind("t,F", 0) == 0);
  CHECK(count_lines(wcsv) == 4);
  CHECK(wcsv.find("0.159727217") != std::string::npos);
}

TEST_CASE("non-finite numbers never reach an artifact") {
  Json ok = Json{{"a", 1.0}, {"b", Json::array({1.0, 2.0})}};
  CHECK_NOTHROW(assert_finite(ok, "test"));

  Json bad = Json{{"a", 1.0}};
  bad["nested"] = Json{{"x", std::nan("")}};
  CHECK_THROWS_AS(assert_finite(bad, "test"), SolverError);

  Json inf = Json{{"v", Json::array({1.0, std::numeric_limits<double>::infinity()})}};
  CHECK_THROWS_AS(assert_finite(inf, "test"), SolverError);
}

TEST_CASE("file writing round-trips bytes") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "prodform_io_write";
  fs::create_directories(dir);
  std::string payload = "line1\nline2\n";
  write_file((dir / "out.txt").string(), payload);

  std::ifstream in(dir / "out.txt", std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == payload);
  fs::remove_all(dir);
}

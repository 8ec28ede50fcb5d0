#include "generators.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace dirform;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dirform-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI with `args`, capturing stdout and stderr.
Run cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + DIRFORM_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

// --- JSON and CSV -----------------------------------------------------------

TEST(Json, ModelRoundTrips) {
  for (const AnyModel& m : {AnyModel(make_random_graph(9, 4)), AnyModel(SGForm(3)), AnyModel(SuperpositionForm(3, 4))}) {
    const json j = model_to_json(m);
    EXPECT_EQ(model_to_json(model_from_json(j)), j);
  }
  const auto g = std::get<GraphForm>(model_from_json(model_to_json(make_random_graph(9, 4))));
  const auto h = make_random_graph(9, 4);
  EXPECT_EQ(g.edges().size(), h.edges().size());
  for (std::size_t k = 0; k < g.edges().size(); ++k) EXPECT_EQ(g.edges()[k].c, h.edges()[k].c);
}

TEST(Json, MalformedModelsAreRejected) {
  EXPECT_THROW(model_from_json(json{{"kind", "torus"}}), IoError);
  EXPECT_THROW(model_from_json(json{{"level", 2}}), IoError);
  EXPECT_THROW(model_from_json(json::parse(R"({"kind":"graph","atoms":[{"id":"a"}],"conductances":[["a","b",1]]})")), Error);
  EXPECT_THROW(read_json("/nonexistent/model.json"), IoError);
}

TEST(Json, FunctionPayloads) {
  const auto p3 = make_path_graph(3);
  EXPECT_EQ(function_from_json(p3, json::parse("[0,1,3]")), (Vector(3) << 0, 1, 3).finished());
  EXPECT_EQ(function_from_json(p3, json::parse(R"({"v2": 3})")), (Vector(3) << 0, 0, 3).finished());
  EXPECT_THROW(function_from_json(p3, json::parse("[1,2]")), BackendMismatch);
  EXPECT_THROW(function_from_json(p3, json::parse("\"x1\"")), BackendMismatch);

  const SGForm sg(2);
  const auto h = function_from_json(sg, json::parse(R"({"harmonic":[1,0,0]})"));
  EXPECT_NEAR(sg.energy(h, h), 2.0, 1e-14);
  EXPECT_THROW(function_from_json(sg, json::parse(R"({"level":3,"values":[1,2,3]})")), BackendMismatch);
  const auto back = function_from_json(sg, function_to_json(sg, sg.refine(h, 2)));
  EXPECT_EQ(back.values, sg.refine(h, 2).values);

  const SuperpositionForm sp(2, 4);
  const auto f = function_from_json(sp, json::parse(R"({"constant":1,"terms":{"x1":2,"x1*y":-1}})"));
  const auto f2 = function_from_json(sp, function_to_json(sp, f));
  EXPECT_EQ(f2.constant, f.constant);
  EXPECT_EQ(f2.linear, f.linear);
  EXPECT_EQ(f2.quadratic, f.quadratic);
}

TEST(Json, FamilyBackendTagMustMatch) {
  const auto p3 = make_path_graph(3);
  const auto fam = indicator_family(p3);
  const json j = family_to_json(p3, std::span<const Vector>(fam));
  EXPECT_EQ(family_from_json(p3, j), fam);
  EXPECT_THROW(family_from_json(SGForm(1), j), BackendMismatch);
  EXPECT_THROW(resolve_family(SGForm(1), "indicators"), BackendMismatch);
}

TEST(Csv, FullPrecisionRows) {
  CsvTable t({"atom_id", "value"});
  t.add("v0", {0.1});
  t.add("v1", {1.0 / 3.0});
  EXPECT_EQ(t.str(), "atom_id,value\nv0,0.10000000000000001\nv1,0.33333333333333331\n");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

// --- CLI --------------------------------------------------------------------

TEST(Cli, GenerateCounts) {
  const auto dir = scratch("generate");
  ASSERT_EQ(cli("generate --kind sg --level 4 --out " + (dir / "sg.json").string(), dir).code, 0);
  EXPECT_EQ(SGForm(4).atoms().size(), std::get<SGForm>(load_model(dir / "sg.json")).atoms().size());
  EXPECT_EQ(std::get<SGForm>(load_model(dir / "sg.json")).atoms().size(), 81u);

  ASSERT_EQ(cli("generate --kind superposition --dim 2 --grid 32 --out " + (dir / "sp.json").string(), dir).code, 0);
  EXPECT_EQ(std::get<SuperpositionForm>(load_model(dir / "sp.json")).atoms().size(), 1056u);

  ASSERT_EQ(cli("generate --kind graph:random --n 20 --seed 20 --out " + (dir / "g.json").string(), dir).code, 0);
  EXPECT_EQ(model_to_json(load_model(dir / "g.json")), model_to_json(reference_random_graph()));
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch("exit");
  EXPECT_EQ(cli("--help", dir).code, 0);
  EXPECT_EQ(cli("generate --kind nonsense", dir).code, 2);
  EXPECT_EQ(cli("index --model /nonexistent.json", dir).code, 2);
  EXPECT_EQ(cli("frobnicate", dir).code, 2);

  write_json(dir / "p3.json", model_to_json(make_path_graph(3)));
  write_json(dir / "sgfam.json", family_to_json(SGForm(1), std::span<const SGFunction>(default_family(SGForm(1)))));
  const auto mismatch = cli("index --model " + (dir / "p3.json").string() + " --family " + (dir / "sgfam.json").string(), dir);
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("backend"), std::string::npos);

  write_json(dir / "wide.json", json{{"backend", "graph"}, {"functions", {{1, 0, 0}, {0, 0, 1}}}});
  EXPECT_EQ(cli("sample --model " + (dir / "p3.json").string() + " --family " + (dir / "wide.json").string(), dir).code, 0);
}

TEST(Cli, IndexCsvAndByteIdenticalReruns) {
  const auto dir = scratch("index");
  write_json(dir / "p3.json", model_to_json(make_path_graph(3)));
  const auto model = " --model " + (dir / "p3.json").string();
  const auto a = cli("index" + model, dir);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, "atom_id,p\nv0,1\nv1,2\nv2,1\n");

  for (const std::string cmd : {"medm", "measures", "sample --seed 5", "grad --function '[0,1,3]'"}) {
    const auto r1 = cli(cmd + model, dir);
    const auto r2 = cli(cmd + model, dir);
    ASSERT_EQ(r1.code, 0) << cmd << ": " << r1.err;
    EXPECT_EQ(r1.out, r2.out) << cmd;
    EXPECT_FALSE(r1.out.empty()) << cmd;
  }
  const auto grad = cli("grad --function '[0,1,3]'" + model, dir);
  EXPECT_EQ(count_lines(grad.out), 4u);
  EXPECT_EQ(grad.out.rfind("atom_id,", 0), 0u);
}

TEST(Cli, SimulateIsDeterministicAcrossWorkerCounts) {
  const auto dir = scratch("simulate");
  write_json(dir / "p3.json", model_to_json(make_path_graph(3)));
  const auto base = "simulate --model " + (dir / "p3.json").string() + " --function '[0,1,3]' --paths 300 --horizon 5 --seed 3";
  const auto a = cli(base + " --workers 1", dir);
  const auto b = cli(base + " --workers 3", dir);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const json j = json::parse(a.out);
  EXPECT_NEAR(j.at("e_exact").get<double>(), 5.0, 1e-12);
  EXPECT_LE(j.at("sup_repr_error").get<double>(), 1e-8);
}

TEST(Cli, CheckSuites) {
  const auto dir = scratch("check");
  write_json(dir / "k3.json", model_to_json(make_complete_graph(3)));
  const auto r = cli("check --suite schur,index --model " + (dir / "k3.json").string() + " --out " + (dir / "r.json").string(), dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const json j = read_json(dir / "r.json");
  EXPECT_EQ(j.at("status"), "pass");
  EXPECT_EQ(cli("check --suite total --graphs 5 --trials 5", dir).code, 0);
  EXPECT_EQ(cli("check --suite index", dir).code, 2);
  EXPECT_EQ(cli("check --suite bogus", dir).code, 2);
}

TEST(Cli, PipelineOnPathGraph) {
  const auto dir = scratch("pipeline-p3");
  write_json(dir / "p3.json", model_to_json(make_path_graph(3)));
  const auto r = cli("pipeline --model " + (dir / "p3.json").string() + " --trials 20 --paths 100 --mc-paths 2000 --out " +
                         (dir / "runs").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path run = r.out.substr(0, r.out.find('\n'));
  for (const char* f : {"model.json", "nu.csv", "index.csv", "tuple.json", "gradient.csv", "residuals.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const json rep = read_json(run / "report.json");
  EXPECT_EQ(rep.at("summary").at("index").get<int>(), 2);
  EXPECT_EQ(rep.at("status"), "pass") << rep.dump(2);
}

TEST(Cli, PipelineOnSuperposition) {
  const auto dir = scratch("pipeline-sp");
  write_json(dir / "sp.json", model_to_json(SuperpositionForm(2, 8)));
  const auto r = cli("pipeline --model " + (dir / "sp.json").string() + " --trials 10 --out " + (dir / "runs").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const fs::path run = r.out.substr(0, r.out.find('\n'));
  const json rep = read_json(run / "report.json");
  EXPECT_EQ(rep.at("summary").at("index").get<int>(), 2);
  EXPECT_EQ(rep.at("summary").at("bulk_p").get<int>(), 2);
  EXPECT_EQ(rep.at("summary").at("surface_p").get<int>(), 1);
}

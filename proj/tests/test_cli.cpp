#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "osearch/cert_io.hpp"

#ifndef OSEARCH_CLI_PATH
#error "OSEARCH_CLI_PATH must point at the built command-line binary"
#endif

namespace {

struct RunOutput {
  int code = -1;
  std::string text;
};

RunOutput run(const std::string& args) {
  const std::string cmd = std::string(OSEARCH_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunOutput out;
  std::array<char, 4096> buf;
  while (fgets(buf.data(), buf.size(), pipe)) out.text += buf.data();
  const int rc = pclose(pipe);
  out.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return out;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("feasibility verdicts map to exit codes") {
  const RunOutput good = run("feasible --n 2 --k 1");
  CHECK(good.code == 0);
  CHECK(good.text.find("verdict: feasible") != std::string::npos);

  const RunOutput bad = run("feasible --n 3 --k 1");
  CHECK(bad.code == 2);
  CHECK(bad.text.find("verdict: infeasible") != std::string::npos);

  const RunOutput trunc = run("feasible --n 56 --k 3 --max-iters 1");
  CHECK((trunc.code == 0 || trunc.code == 3));
}

TEST_CASE("progress lines appear in the documented format") {
  const RunOutput r = run("feasible --n 12 --k 3");
  CHECK(r.code == 0);
  CHECK(r.text.find("iter=0 beta=") != std::string::npos);
  CHECK(r.text.find("|G|=") != std::string::npos);
  CHECK(r.text.find("new_pts=") != std::string::npos);
}

TEST_CASE("certificate output feeds verify and plot") {
  const std::string cert = temp_path("osearch_cli_cert.json");
  const std::string svg = temp_path("osearch_cli_plot.svg");
  const std::string csv = temp_path("osearch_cli_plot.csv");

  const RunOutput synth = run("feasible --n 8 --k 3 --out " + cert);
  REQUIRE(synth.code == 0);
  CHECK(synth.text.find("simulation: min success") != std::string::npos);

  const osearch::CertificateFile stored = osearch::load_certificate(cert);
  CHECK(stored.feas.n == 8);
  CHECK(stored.feas.k == 3);
  CHECK_FALSE(stored.factors.empty());
  REQUIRE(stored.sim.has_value());
  CHECK(stored.sim->min_success >= 1.0 - 1e-6);

  const RunOutput verified = run("verify " + cert);
  CHECK(verified.code == 0);
  CHECK(verified.text.find("verification: OK") != std::string::npos);

  const RunOutput plotted = run("plot " + cert + " --out " + svg + " --csv " + csv);
  CHECK(plotted.code == 0);
  {
    std::ifstream in(svg);
    REQUIRE(in.good());
    std::string head;
    std::getline(in, head);
    CHECK(head.find("<svg") != std::string::npos);
  }
  {
    std::ifstream in(csv);
    REQUIRE(in.good());
    std::string head;
    std::getline(in, head);
    CHECK(head == "t,j,c");
  }
  std::filesystem::remove(cert);
  std::filesystem::remove(svg);
  std::filesystem::remove(csv);
}

TEST_CASE("boundary search prints probes and the answer") {
  const RunOutput r = run("maxn --k 2 --lo 2 --hi 16");
  CHECK(r.code == 0);
  CHECK(r.text.find("probe n=") != std::string::npos);
  CHECK(r.text.find("n_max=6") != std::string::npos);
}

TEST_CASE("rate arithmetic") {
  const RunOutput r = run("rate --k 3 --n 56");
  CHECK(r.code == 0);
  CHECK(r.text.find("0.51658") != std::string::npos);  // 3 / log2(56)
}

TEST_CASE("exports land on disk") {
  const std::string sdp = temp_path("osearch_cli_prog.dat-s");
  const RunOutput rs = run("export-sdp --n 4 --k 2 --epsilon 1e-6 --out " + sdp);
  CHECK(rs.code == 0);
  CHECK(std::filesystem::exists(sdp));
  std::filesystem::remove(sdp);

  const std::string lp = temp_path("osearch_cli_prog.lp");
  const RunOutput rl = run("export-lp --n 4 --k 3 --out " + lp);
  CHECK(rl.code == 0);
  CHECK(std::filesystem::exists(lp));
  std::filesystem::remove(lp);
}

TEST_CASE("bad invocations exit nonzero") {
  CHECK(run("feasible --n 2").code != 0);       // missing --k
  CHECK(run("nonsense").code != 0);
  CHECK(run("verify /nonexistent.json").code == 1);
  CHECK(run("feasible --n 0 --k 1").code == 1);  // rejected by validation
}

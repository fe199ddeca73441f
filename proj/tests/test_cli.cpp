#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string cli_path() {
  if (const char* p = std::getenv("ROTKIT_CLI")) return p;
  for (const char* cand : {"tools/rotkit", "./rotkit", "../tools/rotkit", "build/tools/rotkit"}) {
    std::ifstream f(cand);
    if (f.good()) return cand;
  }
  return "";
}

int run(const std::string& args, std::string* out = nullptr) {
  const std::string exe = cli_path();
  REQUIRE(!exe.empty());
  const std::string cmd = exe + " " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int rc = std::system(cmd.c_str());
  if (out) {
    std::ifstream f("cli_stdout.txt");
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
  }
  return WEXITSTATUS(rc);
}

// file contents with the manifest timestamp line dropped (the documented
// comparison mode)
std::vector<std::string> lines_sans_timestamp(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line))
    if (line.rfind("# timestamp:", 0) != 0) lines.push_back(line);
  return lines;
}

void write_matrix_file(const std::string& path, const std::vector<double>& v) {
  std::ofstream f(path);
  char buf[32];
  for (size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    f << buf << ((i % 4 == 3) ? "\n" : " ");
  }
}

double parse_after(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::strtod(text.c_str() + pos + key.size(), nullptr);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("bounds: golden header and determinism") {
  CHECK(run("bounds --out cli_b1.csv") == 0);
  CHECK(run("bounds --out cli_b2.csv") == 0);
  const auto a = lines_sans_timestamp("cli_b1.csv");
  auto b = lines_sans_timestamp("cli_b2.csv");
  // output paths differ by name only
  for (auto& l : b)
    if (l.rfind("# out:", 0) == 0) l = "# out: cli_b1.csv";
  for (auto& l : a) {
    (void)l;
  }
  auto a2 = a;
  for (auto& l : a2)
    if (l.rfind("# out:", 0) == 0) l = "# out: cli_b1.csv";
  CHECK(a2 == b);

  bool header_found = false, d2_found = false;
  for (const auto& l : a) {
    if (l == "group,closed_form_deg,certified_deg,conjectured,u_w,u_x,u_y,u_z")
      header_found = true;
    if (l.rfind("D2,120.000000000,120.000000000,0,", 0) == 0) d2_found = true;
  }
  CHECK(header_found);
  CHECK(d2_found);
  std::remove("cli_b1.csv");
  std::remove("cli_b2.csv");
}

TEST_CASE("verify-analytic: exit status and schema") {
  CHECK(run("verify-analytic --samples 20000 --seed 5 --out cli_v1.csv") == 0);
  CHECK(run("verify-analytic --samples 20000 --seed 5 --out cli_v2.csv") == 0);
  auto a = lines_sans_timestamp("cli_v1.csv");
  auto b = lines_sans_timestamp("cli_v2.csv");
  for (auto& l : a)
    if (l.rfind("# out:", 0) == 0) l = "# out: x";
  for (auto& l : b)
    if (l.rfind("# out:", 0) == 0) l = "# out: x";
  CHECK(a == b);
  bool header = false;
  for (const auto& l : a)
    if (l == "family,branch,region_count,max_residual") header = true;
  CHECK(header);
  std::remove("cli_v1.csv");
  std::remove("cli_v2.csv");
}

TEST_CASE("decompose4 command") {
  write_matrix_file("cli_eye4.txt",
                    {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  std::string out;
  CHECK(run("decompose4 --matrix cli_eye4.txt", &out) == 0);
  CHECK(out.find("qL = ( 1,  0,  0,  0)") != std::string::npos);
  CHECK(out.find("theta = 0 rad") != std::string::npos);

  const double c1 = std::cos(1.0), s1 = std::sin(1.0);
  const double c2 = std::cos(0.2), s2 = std::sin(0.2);
  write_matrix_file("cli_blk.txt", {c1, -s1, 0, 0, s1, c1, 0, 0, 0, 0, c2, -s2, 0, 0, s2, c2});
  CHECK(run("decompose4 --matrix cli_blk.txt", &out) == 0);
  CHECK(parse_after(out, "theta = ") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(parse_after(out, "phi   = ") == doctest::Approx(0.2).epsilon(1e-9));

  write_matrix_file("cli_bad.txt",
                    {1.02, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  CHECK(run("decompose4 --matrix cli_bad.txt", &out) == 2);
  std::remove("cli_eye4.txt");
  std::remove("cli_blk.txt");
  std::remove("cli_bad.txt");
}

TEST_CASE("witness command modes") {
  std::string out;
  CHECK(run("witness --constant", &out) == 0);
  CHECK(out.find("t0 = 0.5") != std::string::npos);
  CHECK(out.find("error = 180") != std::string::npos);

  // the analytic ensemble is exact: no guaranteed witness exists
  CHECK(run("witness --analytic", &out) == 2);
  CHECK(out.find("no sign change") != std::string::npos);
}

TEST_CASE("train command writes curve and checkpoint; reruns are identical") {
  const std::string args =
      "train --task mat3 --rep quat --heads 1 --iters 250 --batch 32 --lr 1e-3 --seed 9 "
      "--hidden 16,16 --samples 2000";
  CHECK(run(args + " --out cli_t1") == 0);
  CHECK(run(args + " --out cli_t2") == 0);
  auto a = lines_sans_timestamp("cli_t1.csv");
  auto b = lines_sans_timestamp("cli_t2.csv");
  REQUIRE(!a.empty());
  // normalize path + wall-clock lines; everything else must match exactly
  const auto scrub = [](std::vector<std::string>& v) {
    for (auto& l : v) {
      if (l.rfind("# out:", 0) == 0) l = "# out: x";
      if (l.rfind("# train_seconds:", 0) == 0) l = "# train_seconds: x";
    }
  };
  scrub(a);
  scrub(b);
  CHECK(a == b);
  bool header = false;
  for (const auto& l : a)
    if (l == "percentile,error_deg") header = true;
  CHECK(header);

  // the checkpoint feeds the witness command
  std::string out;
  CHECK(run("witness --checkpoint cli_t1.ckpt", &out) == 0);
  CHECK(out.find("error = ") != std::string::npos);

  std::remove("cli_t1.csv");
  std::remove("cli_t2.csv");
  std::remove("cli_t1.ckpt");
  std::remove("cli_t2.ckpt");
}

TEST_SUITE_END();

// End-to-end contract tests for the fblab command line tool.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "fblab/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
    if (!ok) {
        ++failures;
        std::cerr << "FAIL: " << what << "\n";
    }
}

int run(const std::string& args) {
    std::string cmd = std::string(FBLAB_BIN) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

const char* kSpec = R"({
  "schema": "fblab-spec-1",
  "grid": {"origin": [-1, -1], "spacing": 0.015625, "dims": [129, 129]},
  "qplus": {"kind": "constant", "value": 1.0},
  "qminus": {"kind": "constant", "value": 0.0},
  "phase": "one-phase",
  "dirichlet": {"kind": "half-plane", "lambda": 1.0, "center": [0, 0], "normal": [0, 1]},
  "seed": 7
})";

}  // namespace

int main() {
    fs::path work = fs::temp_directory_path() / "fblab_cli_test";
    fs::remove_all(work);
    fs::create_directories(work);
    {
        std::ofstream s(work / "spec.json");
        s << kSpec;
    }

    // solve writes the full artifact set
    check(run("solve --spec " + (work / "spec.json").string() + " --out " +
              (work / "run").string()) == 0,
          "solve exits 0");
    for (const char* name :
         {"u.json", "u.raw", "boundary.csv", "trace.csv", "result.json", "manifest.json"})
        check(fs::exists(work / "run" / name), std::string("run artifact ") + name);

    // determinism: a second solve reproduces identical checksums
    check(run("solve --spec " + (work / "spec.json").string() + " --out " +
              (work / "run2").string()) == 0,
          "second solve exits 0");
    for (const char* name : {"u.raw", "boundary.csv", "trace.csv", "result.json"}) {
        auto a = fblab::fnv64_file((work / "run" / name).string());
        auto b = fblab::fnv64_file((work / "run2" / name).string());
        check(a == b, std::string("checksum match for ") + name);
    }

    // malformed spec: exit 2 with a diagnostic naming the problem
    {
        std::ofstream s(work / "bad.json");
        s << "{\"schema\": \"fblab-spec-1\", \"grid\": {\"origin\": [0,0]}}";
    }
    check(run("solve --spec " + (work / "bad.json").string() + " --out " +
              (work / "bad_run").string()) == 2,
          "malformed spec exits 2");

    // audit on a missing run directory: exit 3
    check(run("audit --run " + (work / "nope").string() + " --out " +
              (work / "nope_audit").string()) == 3,
          "missing run exits 3");

    // full audit produces the seven report kinds
    check(run("audit --run " + (work / "run").string() + " --which all --out " +
              (work / "audit").string()) == 0,
          "audit exits 0");
    for (const char* name : {"weiss.csv", "acf.csv", "nta.json", "ahlfors.csv", "amin.json",
                             "classify.json", "decay.csv"})
        check(fs::exists(work / "audit" / name), std::string("audit artifact ") + name);

    // weiss subcommand over a stored field; an off-boundary point fails with
    // a report row, not a crash
    check(run("weiss --field " + (work / "run/u").string() + " --weights " +
              (work / "run/u").string() + " --point 0,0.5 --rmax 0.3 --out " +
              (work / "weiss_off.csv").string()) != 0 ||
              fs::exists(work / "weiss_off.csv"),
          "weiss off-boundary handled");

    check(run("export-pgm --field " + (work / "run/u").string() + " --out " +
              (work / "u.pgm").string()) == 0,
          "pgm export");
    check(fs::exists(work / "u.pgm"), "pgm file written");

    // byte-identical audits from the same run
    check(run("audit --run " + (work / "run").string() + " --which weiss --out " +
              (work / "audit_b").string()) == 0,
          "repeat audit exits 0");
    check(fblab::fnv64_file((work / "audit/weiss.csv").string()) ==
              fblab::fnv64_file((work / "audit_b/weiss.csv").string()),
          "audit determinism");

    if (failures == 0) std::puts("cli tests passed");
    return failures == 0 ? 0 : 1;
}

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#define CHECK(cond)                                                          \
  do {                                                                       \
    if (!(cond)) {                                                           \
      std::fprintf(stderr, "FAILED %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      std::exit(1);                                                          \
    }                                                                        \
  } while (0)

namespace {

std::string g_cli;

int run(const std::string& args) {
  std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  CHECK(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& path) {
  std::ifstream in(path);
  CHECK(in.good());
  std::string line;
  std::getline(in, line);
  return line;
}

size_t count_lines(const std::string& text) {
  size_t n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CHECK(argc == 2);
  g_cli = argv[1];
  const std::string dir = "/tmp/kdfshot_cli_test";
  CHECK(std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) == 0);

  // Help and error exit codes.
  CHECK(run("help") == 0);
  CHECK(run("--help") == 0);
  CHECK(run("frobnicate") == 2);
  CHECK(run("adapt --source-data " + dir) == 2);  // adaptation takes no source data
  CHECK(run("pretrain --val x --out y") == 2);    // missing required flag
  CHECK(run("extract-features --data /nonexistent.eegw --out " + dir + "/f.csv") == 3);
  CHECK(run("evaluate --data /nonexistent.eegw --out " + dir + "/r.json") == 3);

  // Tiny corpus.
  const std::string gen =
      "gen-data --out " + dir +
      " --seed 7 --classes 2 --channels 2 --samples 64 --fs 64"
      " --n-per-class 6 --n-val-per-class 3 --subjects 3";
  CHECK(run(gen) == 0);
  for (const char* f : {"source_train.eegw", "source_val.eegw", "target_train.eegw",
                        "target_test.eegw"})
    CHECK(std::ifstream(dir + "/" + f).good());

  // Evaluate needs a bundle unless it runs cross-validation.
  CHECK(run("evaluate --data " + dir + "/source_val.eegw --out " + dir + "/r.json") == 2);

  // Deterministic generation: the same command rewrites the same bytes.
  std::string train_bytes = slurp(dir + "/source_train.eegw");
  std::string test_bytes = slurp(dir + "/target_test.eegw");
  CHECK(run(gen) == 0);
  CHECK(slurp(dir + "/source_train.eegw") == train_bytes);
  CHECK(slurp(dir + "/target_test.eegw") == test_bytes);

  // Feature extraction writes a config comment then a CSV.
  CHECK(run("extract-features --data " + dir + "/source_train.eegw --out " + dir + "/f.csv") == 0);
  CHECK(first_line(dir + "/f.csv").rfind("# {", 0) == 0);

  // Config file pass resolves to the same run as explicit flags; unknown
  // config keys are rejected.
  {
    std::ofstream cfg(dir + "/gen.json");
    cfg << "{\"classes\": 2, \"channels\": 2, \"samples\": 64, \"fs\": 64,"
        << " \"n-per-class\": 6, \"n-val-per-class\": 3, \"subjects\": 3}\n";
  }
  CHECK(run("gen-data --config " + dir + "/gen.json --out " + dir + " --seed 7") == 0);
  CHECK(slurp(dir + "/source_train.eegw") == train_bytes);
  {
    std::ofstream cfg(dir + "/bad.json");
    cfg << "{\"not-a-flag\": 1}\n";
  }
  CHECK(run("gen-data --config " + dir + "/bad.json --out " + dir) == 2);

  // Pre-train a small bundle.
  const std::string mdl =
      " --epochs 2 --batch 8 --sdt-depth 2 --patch-len 16 --d-model 8"
      " --n-layers 1 --n-heads 2 --d-ff 16 --patience 0 --seed 5";
  CHECK(run("pretrain --train " + dir + "/source_train.eegw --val " + dir + "/source_val.eegw" +
            " --out " + dir + "/base.kdfb" + mdl) == 0);
  CHECK(std::ifstream(dir + "/base.kdfb").good());
  {
    std::string log = slurp(dir + "/base.kdfb.log.csv");
    CHECK(log.find("epoch,L_vit,L_sdt,val_acc_sdt") != std::string::npos);
    CHECK(count_lines(log) == 4);  // config comment + header + 2 epoch rows
  }

  // Adapt on the shifted target. Inputs and outputs live in a fresh directory
  // so the run's filesystem footprint can be audited exactly: the adapted
  // bundle and its log, nothing else.
  const std::string adir = dir + "/adapt_audit";
  CHECK(std::system(("mkdir -p " + adir + " && cp " + dir + "/base.kdfb " + dir +
                     "/target_train.eegw " + adir)
                        .c_str()) == 0);
  CHECK(run("adapt --bundle " + adir + "/base.kdfb --target " + adir + "/target_train.eegw" +
            " --out " + adir + "/adapted.kdfb --shots 1 --epochs 1 --batch 8 --seed 5") == 0);
  CHECK(std::ifstream(adir + "/adapted.kdfb").good());
  CHECK(first_line(adir + "/adapted.kdfb.log.csv").rfind("# {", 0) == 0);
  {
    std::string listing;
    {
      std::string cmd = "ls " + adir;
      FILE* p = popen(cmd.c_str(), "r");
      CHECK(p != nullptr);
      char buf[256];
      while (fgets(buf, sizeof(buf), p)) listing += buf;
      CHECK(pclose(p) == 0);
    }
    CHECK(listing ==
          "adapted.kdfb\nadapted.kdfb.log.csv\nbase.kdfb\ntarget_train.eegw\n");
  }
  CHECK(std::system(("cp " + adir + "/adapted.kdfb " + dir).c_str()) == 0);

  // Evaluate produces a JSON report with per-model metrics.
  CHECK(run("evaluate --bundle " + dir + "/adapted.kdfb --data " + dir + "/target_test.eegw" +
            " --out " + dir + "/report.json") == 0);
  {
    std::string rep = slurp(dir + "/report.json");
    CHECK(rep.find("\"sdt\"") != std::string::npos);
    CHECK(rep.find("\"vit\"") != std::string::npos);
    CHECK(rep.find("\"bca\"") != std::string::npos);
  }

  // Shot sweep: header plus one row per (shot, model, metric).
  CHECK(run("sweep-shots --bundle " + dir + "/base.kdfb --target " + dir + "/target_train.eegw" +
            " --test " + dir + "/target_test.eegw --out " + dir + "/sweep.csv" +
            " --shots 1 --repeats 1 --epochs 1 --batch 8 --seed 5") == 0);
  {
    std::string sweep = slurp(dir + "/sweep.csv");
    CHECK(sweep.find("shots,model,metric,mean,std") != std::string::npos);
    size_t rows = count_lines(sweep);
    if (sweep.rfind("# {", 0) == 0) --rows;  // config comment
    CHECK(rows == 1 + 6);  // header + 1 shot x 2 models x 3 metrics
    CHECK(run("sweep-shots --bundle " + dir + "/base.kdfb --target " + dir +
              "/target_train.eegw --test " + dir + "/target_test.eegw --out " + dir +
              "/sweep.csv --shots 1,oops") == 2);
  }

  std::printf("test_cli: all passed\n");
  return 0;
}

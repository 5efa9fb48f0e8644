#include <gtest/gtest.h>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const std::string kBin = SIMLINK_BIN;
const std::string kData = SIMLINK_DATA;

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  auto dir = fs::temp_directory_path() / ("simlink-cli-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto err_file = scratch_dir() / "stderr.txt";
  const std::string cmd = "env -u SIMLINK_TOKEN " + kBin + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_file);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// A long-running subcommand; the first stdout line announces its address.
class Child {
 public:
  explicit Child(std::vector<std::string> args) {
    int fds[2];
    if (::pipe(fds) != 0) return;
    pid_ = ::fork();
    if (pid_ == 0) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
      std::vector<char*> argv{const_cast<char*>(kBin.c_str())};
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(kBin.c_str(), argv.data());
      ::_exit(127);
    }
    ::close(fds[1]);
    out_ = ::fdopen(fds[0], "r");
  }
  ~Child() {
    if (pid_ > 0) {
      ::kill(pid_, SIGTERM);
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
    if (out_) std::fclose(out_);
  }
  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  // "listening 127.0.0.1:4321" -> "127.0.0.1:4321"
  std::string announced() {
    char buf[256] = {};
    if (!out_ || !std::fgets(buf, sizeof buf, out_)) return {};
    std::string line(buf);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    const auto space = line.find(' ');
    return space == std::string::npos ? line : line.substr(space + 1);
  }

 private:
  pid_t pid_ = -1;
  FILE* out_ = nullptr;
};

}  // namespace

TEST(Cli, LabSingleRow) {
  const auto r = run("lab --rtt-grid 0 --stall off");
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, "rtt_ms,stall,success_rate,median_elapsed_ms\n0,off,1.0,2000.0\n");
}

TEST(Cli, LabDefaultGridWithStall) {
  const auto r = run("lab --stall on");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_NE(rows[i].find(",on,1.0,"), std::string::npos) << rows[i];
  }
}

TEST(Cli, LabWritesCsvFile) {
  const auto out = scratch_dir() / "sweep.csv";
  const auto r = run("lab --rtt-grid 600 --stall off --out " + out.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(out), "rtt_ms,stall,success_rate,median_elapsed_ms\n600,off,0.0,900.0\n");
}

TEST(Cli, ConfigErrorsExitTwo) {
  for (const char* args : {"", "lab --stall maybe", "lab --rtt-grid 1,x", "lab --script bogus",
                           "lab --waiting-time 0", "trace decode /nonexistent",
                           "provide --broker 127.0.0.1:1 --profile /nonexistent"}) {
    const auto r = run(std::string("--token t ") + args);
    EXPECT_EQ(r.status, 2) << args << "\n" << r.err;
  }
  const auto r = run("probe --broker 127.0.0.1:1 --lease tag");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("\"error\":\"ConfigError\""), std::string::npos) << r.err;
}

TEST(Cli, UnreachableBrokerExitsOne) {
  const auto r = run("--token t probe --broker 127.0.0.1:1 --lease tag");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("TransportError"), std::string::npos) << r.err;
}

TEST(Cli, EndToEndAcrossProcesses) {
  const auto dir = scratch_dir() / "e2e";
  fs::remove_all(dir);
  fs::create_directories(dir / "traces");

  Child broker({"--token", "cli-secret", "broker", "--listen", "127.0.0.1:0", "--state-log",
                (dir / "state.jsonl").string(), "--sweep-interval-ms", "100"});
  const auto broker_at = broker.announced();
  ASSERT_FALSE(broker_at.empty());

  // Nothing registered yet.
  const auto empty = run("--token cli-secret probe --broker " + broker_at + " --lease any");
  EXPECT_EQ(empty.status, 1);
  EXPECT_NE(empty.err.find("NoMatch"), std::string::npos) << empty.err;

  const auto wrong = run("--token nope probe --broker " + broker_at + " --lease any");
  EXPECT_EQ(wrong.status, 1);
  EXPECT_NE(wrong.err.find("Unauthorized"), std::string::npos) << wrong.err;

  Child provider({"--token", "cli-secret", "provide", "--broker", broker_at, "--profile",
                  kData + "/demo_profile.json", "--rules", kData + "/rules_iccid.json",
                  "--trace-dir", (dir / "traces").string(), "--tags", "lab,at"});
  ASSERT_FALSE(provider.announced().empty());

  const auto probe_trace = dir / "probe.jsonl";
  const auto r = run("--token cli-secret probe --broker " + broker_at + " --lease lab --profile " +
                     kData + "/demo_profile.json --trace-out " + probe_trace.string());
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("\"iccid\":\"8944000000000000001\""), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("\"aka_ok\":true"), std::string::npos) << r.out;

  const auto silent = run("trace grep-silent-sms " + probe_trace.string());
  EXPECT_EQ(silent.status, 0);
  EXPECT_EQ(lines(silent.out).size(), 1u);

  const auto decoded = run("trace decode " + probe_trace.string());
  EXPECT_EQ(decoded.status, 0);
  EXPECT_EQ(lines(decoded.out).size(), lines(slurp(probe_trace)).size());

  // The provider keeps the card's own ICCID next to the rewrite.
  std::string provider_trace;
  for (int i = 0; i < 50 && provider_trace.find("rewritten") == std::string::npos; ++i) {
    for (const auto& entry : fs::directory_iterator(dir / "traces")) provider_trace = slurp(entry.path());
    ::usleep(20000);
  }
  EXPECT_NE(provider_trace.find("\"rule_id\":\"replace-iccid\""), std::string::npos);
  EXPECT_NE(provider_trace.find("983410325476981032F0"), std::string::npos) << provider_trace;
}

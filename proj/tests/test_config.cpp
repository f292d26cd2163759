#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "cmt/config.hpp"

using namespace cmt;

TEST_CASE("default config validates and matches the desk profile") {
  RunConfig c = default_config();
  CHECK_NOTHROW(c.validate());
  CHECK(c.max_edges == 32);
  CHECK(c.max_surfaces == 16);
}

TEST_CASE("profiles set the paper sequence lengths") {
  RunConfig c = parse_config("[profile]\nname = \"deepcad\"\n");
  CHECK(c.max_edges == 64);
  CHECK(c.max_surfaces == 32);
  c = parse_config("[profile]\nname = \"abc\"\n");
  CHECK(c.max_edges == 128);
  CHECK(c.max_surfaces == 64);
}

TEST_CASE("values parse with sections and comments") {
  const char* text =
      "# a comment\n"
      "[train]\n"
      "epochs = 42   # inline comment\n"
      "lr = 0.005\n"
      "[sample]\n"
      "seed = 99\n";
  RunConfig c = parse_config(text);
  CHECK(c.train_epochs == 42);
  CHECK(c.train_lr == doctest::Approx(0.005));
  CHECK(c.sample_seed == 99);
}

TEST_CASE("errors carry the origin and line number") {
  try {
    parse_config("[train]\nepochs = banana\n", "cfg.toml");
    FAIL("expected throw");
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("cfg.toml:2") != std::string::npos);
  }
  try {
    parse_config("[train]\nnot_a_key = 3\n", "cfg.toml");
    FAIL("expected throw");
  } catch (const std::exception& e) {
    std::string msg = e.what();
    CHECK(msg.find("cfg.toml:2") != std::string::npos);
    CHECK(msg.find("unknown key") != std::string::npos);
  }
}

TEST_CASE("invariants are enforced") {
  CHECK_THROWS(parse_config("[profile]\nmax_edges = 4\nmax_surfaces = 8\n"));
  CHECK_THROWS(parse_config("[mar]\nwidth = 100\nheads = 3\n"));
  CHECK_THROWS(parse_config("[mar]\npredict = \"v\"\n"));
}

TEST_CASE("resolved config round-trips through its own toml dump") {
  RunConfig c = default_config();
  c.train_epochs = 123;
  c.train_lr = 0.00025;
  c.profile = "deepcad";
  c.max_edges = 64;
  c.max_surfaces = 32;
  RunConfig back = parse_config(c.to_toml());
  CHECK(back.train_epochs == c.train_epochs);
  CHECK(back.train_lr == c.train_lr);
  CHECK(back.max_edges == 64);
  CHECK(back.to_toml() == c.to_toml());
}

TEST_CASE("CMT_SEED override applies to every seed") {
  RunConfig c = default_config();
  setenv("CMT_SEED", "31337", 1);
  apply_env_overrides(c);
  unsetenv("CMT_SEED");
  CHECK(c.synth_seed == 31337);
  CHECK(c.train_seed == 31337);
  CHECK(c.sample_seed == 31337);
}

#include <gtest/gtest.h>

#include <fstream>

#include "dske/agent.hpp"
#include "dske/error.hpp"
#include "dske/hub.hpp"
#include "dske/kvconfig.hpp"
#include "test_support.hpp"

namespace dske {
namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::contract_violation;
}

TEST(KvConfig, ParsesKeysCommentsAndRepeats) {
  const auto cfg = KvConfig::parse(
      "# header\n"
      "  name = alpha  \n"
      "\n"
      "list = 1, 2 ,3\n"
      "hub = a@127.0.0.1:1\n"
      "hub = b@127.0.0.1:2   # trailing\n"
      "flag = yes\n"
      "hex = 0x1F\n");
  EXPECT_EQ(cfg.require("name"), "alpha");
  EXPECT_EQ(split_list(*cfg.get("list")), (std::vector<std::string>{"1", "2", "3"}));
  EXPECT_EQ(cfg.get_all("hub").size(), 2u);
  EXPECT_EQ(*cfg.get("hub"), "b@127.0.0.1:2");
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_FALSE(cfg.get_bool("missing", false));
  EXPECT_EQ(cfg.get_uint("hex"), 31u);
  EXPECT_EQ(cfg.get_uint("absent", 9), 9u);
  EXPECT_FALSE(cfg.has("absent"));
  EXPECT_EQ(cfg.entries().size(), 6u);
}

TEST(KvConfig, ErrorsCarryLineNumbers) {
  try {
    KvConfig::parse("a = 1\nno equals here\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config_error);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  const auto cfg = KvConfig::parse("n = twelve\n");
  EXPECT_EQ(code_of([&] { cfg.get_uint("n"); }), Errc::config_error);
  EXPECT_EQ(code_of([&] { cfg.require("k"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { parse_uint("-1"); }), Errc::config_error);
  EXPECT_EQ(code_of([] { KvConfig::load("/nonexistent/dske.conf"); }), Errc::config_error);
}

TEST(KvConfig, HubConfig) {
  const auto cfg = parse_hub_config(KvConfig::parse(
      "identity = hub1\nlisten = 127.0.0.1:7001\ntable_dir = /tmp/x\nallow = alice>bob\nallow = bob>alice\n"
      "queue_depth = 8\n"));
  EXPECT_EQ(cfg.identity.str(), "hub1");
  EXPECT_EQ(cfg.listen.port, 7001);
  EXPECT_EQ(cfg.allow.size(), 2u);
  EXPECT_FALSE(cfg.allow_all);
  EXPECT_EQ(cfg.queue_depth, 8u);
  EXPECT_TRUE(parse_hub_config(KvConfig::parse("identity = h\nlisten = 0.0.0.0:1\ntable_dir = t\nallow = *\n")).allow_all);
  EXPECT_EQ(code_of([] { parse_hub_config(KvConfig::parse("identity = h\nlisten = nowhere\ntable_dir = t\n")); }),
            Errc::config_error);
}

TEST(KvConfig, ClientConfig) {
  const auto cfg = parse_client_config(KvConfig::parse(
      "identity = alice\nhub = hub1@127.0.0.1:7001\nhub = hub2@127.0.0.1:7002\nhub = hub3@127.0.0.1:7003\n"
      "k = 2\nm = 4\ntable_dir = /tmp/alice\napi_listen = 127.0.0.1:7100\nfinalize_deadline_ms = 250\n"));
  EXPECT_EQ(cfg.params.n, 3u);
  EXPECT_EQ(cfg.params.k, 2u);
  EXPECT_EQ(cfg.params.m, 4u);
  EXPECT_EQ(cfg.hubs[1].id.str(), "hub2");
  EXPECT_EQ(cfg.hubs[2].endpoint.port, 7003);
  ASSERT_TRUE(cfg.api_listen.has_value());
  EXPECT_EQ(cfg.finalize_deadline.count(), 250);
  EXPECT_EQ(code_of([] {
              parse_client_config(KvConfig::parse("identity = a\nhub = h@127.0.0.1:1\nn = 2\nk = 1\ntable_dir = t\n"));
            }),
            Errc::config_error);
}

}  // namespace
}  // namespace dske

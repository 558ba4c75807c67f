#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "promptmotion/description_cache.hpp"
#include "promptmotion/errors.hpp"
#include "promptmotion/hashing.hpp"
#include "promptmotion/prompting.hpp"
#include "promptmotion/random.hpp"

namespace pm = promptmotion;
namespace fs = std::filesystem;

namespace {

pm::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const pm::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected promptmotion::Error";
  return pm::ErrorCode::IoError;
}

class CountingClient : public pm::LlmClient {
 public:
  explicit CountingClient(std::uint64_t seed = 0) : stub_(seed) {}
  pm::Completion complete(const pm::PromptText& prompt, const pm::LlmConfig& config, int index) override {
    ++calls;
    return stub_.complete(prompt, config, index);
  }
  int calls = 0;

 private:
  pm::StubLlmClient stub_;
};

// Returns scripted texts in order, then repeats the last one.
class ScriptedClient : public pm::LlmClient {
 public:
  explicit ScriptedClient(std::vector<std::string> texts) : texts_(std::move(texts)) {}
  pm::Completion complete(const pm::PromptText&, const pm::LlmConfig&, int) override {
    const auto& t = texts_[std::min(calls, texts_.size() - 1)];
    ++calls;
    return {t, pm::whitespace_token_count(t)};
  }
  std::size_t calls = 0;

 private:
  std::vector<std::string> texts_;
};

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("promptmotion_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int count_lexicon_terms(const std::string& text) {
  int n = 0;
  for (const auto& term : pm::body_part_lexicon()) {
    if (text.find(term) != std::string::npos) ++n;
  }
  return n;
}

}  // namespace

TEST(ActionPhrase, TrimsAndCountsWords) {
  const auto p = pm::ActionPhrase::make("  act like  a dog \n");
  EXPECT_EQ(p.text(), "act like  a dog");
  EXPECT_EQ(p.word_count(), 4);
  EXPECT_EQ(pm::ActionPhrase::make(" Walk ").normalized(), "walk");
  EXPECT_EQ(code_of([] { pm::ActionPhrase::make(" \t "); }), pm::ErrorCode::EmptyPhrase);
}

TEST(BuildPrompt, FullTemplateIsExact) {
  const auto prompt = pm::build_prompt(pm::ActionPhrase::make("act like a dog"), "v1");
  EXPECT_EQ(prompt.text, "Describe a person's body movements who is performing the action act like a dog in detail");
  EXPECT_EQ(prompt.prompt_version, "v1");
}

TEST(BuildPrompt, RegistryVariants) {
  const auto walk = pm::ActionPhrase::make("walk");
  EXPECT_EQ(pm::build_prompt(walk, "bare").text, "walk");
  EXPECT_EQ(pm::build_prompt(walk, "no-detail").text,
            "Describe a person's body movements who is performing the action walk");
  EXPECT_EQ(pm::build_prompt(walk, "person").text, "Describe a person who is performing the action walk");
  EXPECT_EQ(pm::prompt_registry().size(), 4u);
  EXPECT_EQ(code_of([&] { pm::build_prompt(walk, "v9"); }), pm::ErrorCode::UnknownPromptVersion);
}

TEST(BuildPrompt, PhraseAppearsOnceAndRoundTrips) {
  pm::Rng rng(11);
  const std::vector<std::string> words = {"run", "jump", "left", "arm", "spin", "slowly", "kick", "wave"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string phrase;
    const int n = 1 + static_cast<int>(rng.next_u64() % 5);
    for (int i = 0; i < n; ++i) phrase += (i ? " " : "") + words[rng.next_u64() % words.size()];
    const auto a = pm::ActionPhrase::make(phrase);
    const auto p1 = pm::build_prompt(a, "v1");
    EXPECT_EQ(p1.text, pm::build_prompt(a, "v1").text);
    const auto first = p1.text.find(phrase);
    ASSERT_NE(first, std::string::npos);
    EXPECT_EQ(p1.text.find(phrase, first + 1), std::string::npos) << phrase;
    for (const auto& t : pm::prompt_registry()) {
      EXPECT_EQ(pm::extract_action(pm::build_prompt(a, t.version).text), phrase);
    }
  }
}

TEST(LlmConfig, DefaultsAndRanges) {
  const pm::LlmConfig c;
  EXPECT_EQ(c.model_name, "davinci-002");
  EXPECT_EQ(c.temperature, 0.5);
  EXPECT_EQ(c.top_p, 1.0);
  EXPECT_EQ(c.max_tokens, 140);
  EXPECT_EQ(c.k, 4);
  EXPECT_NO_THROW(c.validate());
  auto bad = [](auto mutate) {
    pm::LlmConfig x;
    mutate(x);
    return code_of([&] { x.validate(); });
  };
  EXPECT_EQ(bad([](pm::LlmConfig& x) { x.temperature = 2.5; }), pm::ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](pm::LlmConfig& x) { x.top_p = 0.0; }), pm::ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](pm::LlmConfig& x) { x.max_tokens = 5000; }), pm::ErrorCode::InvalidConfig);
  EXPECT_EQ(bad([](pm::LlmConfig& x) { x.k = 0; }), pm::ErrorCode::InvalidConfig);
}

TEST(StubClient, DeterministicUnderSeed) {
  const auto a = pm::ActionPhrase::make("act like a dog");
  const auto prompt = pm::build_prompt(a, "v1");
  pm::LlmConfig c;
  c.k = 1;
  pm::StubLlmClient s1(7), s2(7), s3(8);
  const auto d1 = pm::generate_descriptions(a, prompt, c, s1);
  EXPECT_EQ(d1, pm::generate_descriptions(a, prompt, c, s1));
  EXPECT_EQ(d1, pm::generate_descriptions(a, prompt, c, s2));
  EXPECT_NE(d1.descriptions, pm::generate_descriptions(a, prompt, c, s3).descriptions);
}

TEST(StubClient, PairwiseDistinctWithBodyPartTerms) {
  for (const char* phrase : {"walk", "act like a dog", "raise the left arm", "do a cartwheel"}) {
    for (int k : {3, 8, 20}) {
      pm::LlmConfig c;
      c.k = k;
      pm::StubLlmClient stub(3);
      const auto a = pm::ActionPhrase::make(phrase);
      const auto set = pm::generate_descriptions(a, pm::build_prompt(a, "v1"), c, stub);
      ASSERT_EQ(static_cast<int>(set.descriptions.size()), k);
      const std::set<std::string> unique(set.descriptions.begin(), set.descriptions.end());
      EXPECT_EQ(static_cast<int>(unique.size()), k) << phrase;
      for (const auto& d : set.descriptions) {
        EXPECT_GE(count_lexicon_terms(d), 2) << d;
        EXPECT_LE(pm::whitespace_token_count(d), c.max_tokens);
      }
    }
  }
}

TEST(StubClient, RespectsTokenBudget) {
  pm::LlmConfig c;
  c.k = 2;
  c.max_tokens = 5;
  pm::StubLlmClient stub;
  const auto a = pm::ActionPhrase::make("walk");
  for (const auto& d : pm::generate_descriptions(a, pm::build_prompt(a, "v1"), c, stub).descriptions) {
    EXPECT_EQ(pm::whitespace_token_count(d), 5);
  }
}

TEST(GenerateDescriptions, RetriesWhitespaceOnce) {
  const auto a = pm::ActionPhrase::make("walk");
  pm::LlmConfig c;
  c.k = 1;
  ScriptedClient once({"  \n", "The person swings the arms and legs."});
  const auto set = pm::generate_descriptions(a, pm::build_prompt(a, "v1"), c, once);
  EXPECT_EQ(once.calls, 2u);
  EXPECT_EQ(set.descriptions.front(), "The person swings the arms and legs.");

  ScriptedClient never({" ", "\t"});
  EXPECT_EQ(code_of([&] { pm::generate_descriptions(a, pm::build_prompt(a, "v1"), c, never); }),
            pm::ErrorCode::EmptyCompletion);
  EXPECT_EQ(never.calls, 2u);
}

TEST(Hashing, Sha256KnownVectors) {
  EXPECT_EQ(pm::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(pm::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DescriptionCache, MissThenHitWithOneFanOut) {
  const auto root = fresh_dir("cache_hit");
  const pm::DescriptionCache cache(root);
  CountingClient client;
  pm::LlmConfig c;
  const auto a = pm::ActionPhrase::make("walk");
  const auto first = pm::cached_descriptions(a, c, "v1", cache, client);
  EXPECT_EQ(client.calls, c.k);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(pm::cached_descriptions(a, c, "v1", cache, client), first);
  EXPECT_EQ(client.calls, c.k);

  const auto path = cache.path_for(pm::DescriptionCache::key_for(a, c, "v1"));
  EXPECT_EQ(path.filename().string(), pm::sha256_hex(pm::DescriptionCache::key_for(a, c, "v1")) + ".json");
  ASSERT_TRUE(fs::exists(path));
  std::ifstream in(path);
  const auto record = nlohmann::json::parse(in);
  for (const char* field : {"phrase", "prompt_version", "config", "descriptions", "created_at"}) {
    EXPECT_TRUE(record.contains(field)) << field;
  }
  for (const char* field : {"model", "temperature", "top_p", "max_tokens", "k"}) {
    EXPECT_TRUE(record["config"].contains(field)) << field;
  }
  fs::remove_all(root);
}

TEST(DescriptionCache, KeyCoversSamplingConfig) {
  const auto a = pm::ActionPhrase::make("walk");
  pm::LlmConfig c4, c8;
  c8.k = 8;
  EXPECT_NE(pm::DescriptionCache::key_for(a, c4, "v1"), pm::DescriptionCache::key_for(a, c8, "v1"));
  EXPECT_NE(pm::DescriptionCache::key_for(a, c4, "v1"), pm::DescriptionCache::key_for(a, c4, "bare"));
  pm::LlmConfig t = c4;
  t.temperature = 0.7;
  EXPECT_NE(pm::DescriptionCache::key_for(a, c4, "v1"), pm::DescriptionCache::key_for(a, t, "v1"));
  EXPECT_EQ(pm::DescriptionCache::key_for(pm::ActionPhrase::make("  Walk "), c4, "v1"),
            pm::DescriptionCache::key_for(a, c4, "v1"));

  const auto root = fresh_dir("cache_key");
  const pm::DescriptionCache cache(root);
  CountingClient client;
  pm::cached_descriptions(a, c4, "v1", cache, client);
  pm::cached_descriptions(a, c8, "v1", cache, client);
  EXPECT_EQ(client.calls, 12);
  pm::cached_descriptions(pm::ActionPhrase::make("  Walk "), c4, "v1", cache, client);
  EXPECT_EQ(client.calls, 12);
  EXPECT_EQ(std::distance(fs::directory_iterator(root), fs::directory_iterator{}), 2);
  fs::remove_all(root);
}

TEST(DescriptionCache, CorruptRecordIsAMiss) {
  const auto root = fresh_dir("cache_corrupt");
  const pm::DescriptionCache cache(root);
  CountingClient client;
  pm::LlmConfig c;
  c.k = 2;
  const auto a = pm::ActionPhrase::make("nod");
  const auto good = pm::cached_descriptions(a, c, "v1", cache, client);
  const auto path = cache.path_for(pm::DescriptionCache::key_for(a, c, "v1"));
  { std::ofstream(path, std::ios::trunc) << "{\"phrase\": 3"; }
  EXPECT_EQ(code_of([&] { pm::parse_cache_record("{\"phrase\": 3"); }), pm::ErrorCode::CacheCorrupt);
  EXPECT_EQ(pm::cached_descriptions(a, c, "v1", cache, client), good);
  EXPECT_EQ(client.calls, 4);
  EXPECT_EQ(pm::cached_descriptions(a, c, "v1", cache, client), good);
  EXPECT_EQ(client.calls, 4);

  // Wrong description count for the stored k.
  auto record = nlohmann::json::parse(std::ifstream(path));
  record["descriptions"].push_back("extra");
  EXPECT_EQ(code_of([&] { pm::parse_cache_record(record.dump()); }), pm::ErrorCode::CacheCorrupt);
  fs::remove_all(root);
}

TEST(DescriptionCache, ConcurrentMissesConverge) {
  const auto root = fresh_dir("cache_race");
  const pm::DescriptionCache cache(root);
  pm::LlmConfig c;
  const auto a = pm::ActionPhrase::make("spin around");
  std::vector<pm::DescriptionSet> results(4, pm::DescriptionSet{a, {}, c, "v1"});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      pm::StubLlmClient stub(5);
      results[static_cast<std::size_t>(t)] = pm::cached_descriptions(a, c, "v1", cache, stub);
    });
  }
  for (auto& th : threads) th.join();
  for (const auto& r : results) EXPECT_EQ(r, results.front());
  EXPECT_TRUE(cache.load(a, c, "v1").has_value());
  fs::remove_all(root);
}

class MockCompletionsServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      last_auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      last_body_ = body;
      if (status_ != 200) {
        res.status = status_;
        res.set_content("{\"error\": \"nope\"}", "application/json");
        return;
      }
      const nlohmann::json reply = {
          {"choices", {{{"text", " The person swings both arms and lifts the legs. " + std::to_string(requests_.load())}}}},
          {"usage", {{"completion_tokens", 11}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    ::setenv("PROMPTMOTION_TEST_KEY", "sk-test", 1);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
    ::unsetenv("PROMPTMOTION_TEST_KEY");
  }
  pm::CompletionsApiClient client() const {
    pm::CompletionsApiClient::Options o;
    o.base_url = "http://127.0.0.1:" + std::to_string(port_);
    o.api_key_env = "PROMPTMOTION_TEST_KEY";
    o.timeout_seconds = 5;
    return pm::CompletionsApiClient(o);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  int status_ = 200;
  std::string last_auth_;
  nlohmann::json last_body_;
};

TEST_F(MockCompletionsServer, IssuesKIndependentRequests) {
  auto live = client();
  const auto a = pm::ActionPhrase::make("walk");
  const pm::LlmConfig c;
  const auto set = pm::generate_descriptions(a, pm::build_prompt(a, "v1"), c, live);
  EXPECT_EQ(requests_.load(), 4);
  ASSERT_EQ(set.descriptions.size(), 4u);
  EXPECT_EQ(std::set<std::string>(set.descriptions.begin(), set.descriptions.end()).size(), 4u);
  EXPECT_EQ(last_auth_, "Bearer sk-test");
  EXPECT_EQ(last_body_["model"], "davinci-002");
  EXPECT_EQ(last_body_["max_tokens"], 140);
  EXPECT_EQ(last_body_["temperature"], 0.5);
  EXPECT_EQ(last_body_["top_p"], 1.0);
  EXPECT_EQ(last_body_["prompt"], "Describe a person's body movements who is performing the action walk in detail");
}

TEST_F(MockCompletionsServer, UpstreamFailureIsClientUnavailable) {
  status_ = 401;
  auto live = client();
  const auto a = pm::ActionPhrase::make("walk");
  EXPECT_EQ(code_of([&] { pm::generate_descriptions(a, pm::build_prompt(a, "v1"), pm::LlmConfig{}, live); }),
            pm::ErrorCode::ClientUnavailable);
  ::unsetenv("PROMPTMOTION_TEST_KEY");
  EXPECT_EQ(code_of([&] { live.complete(pm::build_prompt(a, "v1"), pm::LlmConfig{}, 0); }),
            pm::ErrorCode::ClientUnavailable);
}

TEST(CompletionsApiClient, UnreachableHostIsClientUnavailable) {
  ::setenv("PROMPTMOTION_TEST_KEY", "sk-test", 1);
  pm::CompletionsApiClient::Options o;
  o.base_url = "http://127.0.0.1:1";
  o.api_key_env = "PROMPTMOTION_TEST_KEY";
  o.timeout_seconds = 2;
  pm::CompletionsApiClient live(o);
  const auto a = pm::ActionPhrase::make("walk");
  EXPECT_EQ(code_of([&] { live.complete(pm::build_prompt(a, "v1"), pm::LlmConfig{}, 0); }),
            pm::ErrorCode::ClientUnavailable);
  ::unsetenv("PROMPTMOTION_TEST_KEY");
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(pm::exit_code_for(pm::ErrorCode::ClientUnavailable), 3);
  EXPECT_EQ(pm::exit_code_for(pm::ErrorCode::EmptyCompletion), 3);
  EXPECT_EQ(pm::exit_code_for(pm::ErrorCode::SchemaError), 2);
  EXPECT_EQ(pm::exit_code_for(pm::ErrorCode::EmptyPhrase), 2);
}

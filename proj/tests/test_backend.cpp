#include "distalign/backend.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "distalign/http_backend.hpp"

using namespace distalign;

namespace {

std::filesystem::path temp_file(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "distalign_backend";
  std::filesystem::create_directories(dir);
  const auto path = dir / name;
  std::filesystem::remove(path);
  return path;
}

ScoreRequest request_of(std::string continuation,
                        std::string context = "ctx",
                        std::string model = "m",
                        std::string template_id = "v1-index") {
  return {std::move(model), std::move(template_id), std::move(context),
          std::move(continuation)};
}

// Inner backend that always answers with a fixed response.
class StubBackend : public ScoringBackend {
 public:
  explicit StubBackend(ScoreResponse response)
      : response_(std::move(response)) {}

 private:
  ScoreResponse do_score(const ScoreRequest&) override { return response_; }
  ScoreResponse response_;
};

}  // namespace

TEST_SUITE("backend") {

TEST_CASE("table backend answers its entries verbatim") {
  TableBackend backend;
  backend.add("ctx", " A", {{{" A", -1.2}}});
  const auto response = backend.score(request_of(" A"));
  REQUIRE(response.tokens.size() == 1);
  CHECK(response.tokens[0].text == " A");
  CHECK(response.tokens[0].logprob == -1.2);
  CHECK(backend.call_count() == 1);
}

TEST_CASE("unknown request under the error fallback names the request") {
  TableBackend backend;
  backend.add("ctx", " A", {{{" A", -1.2}}});
  const auto missing = request_of(" B");
  try {
    (void)backend.score(missing);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(std::string(e.what()).find(cache_key(missing).substr(0, 12)) !=
          std::string::npos);
  }
}

TEST_CASE("uniform fallback scores one token at log(1/V)") {
  TableBackend backend(TableFallback::uniform, 4);
  const auto response = backend.score(request_of(" anything"));
  REQUIRE(response.tokens.size() == 1);
  CHECK(response.tokens[0].text == " anything");
  CHECK(response.tokens[0].logprob == doctest::Approx(std::log(0.25)));
  CHECK_THROWS_AS(TableBackend(TableFallback::uniform, 0), ValidationError);
}

TEST_CASE("table files load and reject garbage") {
  const auto good = temp_file("table_good.jsonl");
  {
    std::ofstream out(good);
    out << R"({"context":"c","continuation":" A","tokens":[{"text":" A","logprob":-0.5}]})"
        << "\n";
  }
  const auto backend = load_table_backend(good);
  CHECK(backend->size() == 1);
  CHECK(backend->score(request_of(" A", "c")).tokens[0].logprob == -0.5);

  const auto bad = temp_file("table_bad.jsonl");
  {
    std::ofstream out(bad);
    out << "{\"context\": oops}\n";
  }
  CHECK_THROWS_AS((void)load_table_backend(bad), ValidationError);

  // Tokens must reconstruct the continuation even at load time.
  const auto mismatched = temp_file("table_mismatch.jsonl");
  {
    std::ofstream out(mismatched);
    out << R"({"context":"c","continuation":" A","tokens":[{"text":"B","logprob":-0.5},{"text":"?","logprob":-0.5}]})"
        << "\n";
  }
  CHECK_THROWS_AS((void)load_table_backend(mismatched), BackendError);

  CHECK_THROWS_AS((void)load_table_backend(temp_file("absent.jsonl")),
                  ValidationError);
}

TEST_CASE("token reconstruction is enforced behind the cache") {
  ResponseCache cache;
  StubBackend inner({{{"B", -0.1}, {"?", -0.2}}});
  CachingBackend backend(cache, &inner);
  CHECK_THROWS_AS((void)backend.score(request_of(" A")), BackendError);
  // Nothing bogus was cached.
  CHECK(cache.size() == 0);
}

TEST_CASE("cache keys separate every request field") {
  const auto base = request_of(" A");
  auto other_model = base;
  other_model.model = "m2";
  auto other_template = base;
  other_template.template_id = "v2-index";
  auto other_context = base;
  other_context.context = "ctx2";
  auto other_continuation = base;
  other_continuation.continuation = " B";
  const auto key = cache_key(base);
  CHECK(key != cache_key(other_model));
  CHECK(key != cache_key(other_template));
  CHECK(key != cache_key(other_context));
  CHECK(key != cache_key(other_continuation));
  CHECK(key == cache_key(request_of(" A")));
  CHECK(key.size() == 64);
}

TEST_CASE("field boundaries cannot be shifted between context and continuation") {
  ScoreRequest a{"m", "t", "ab", "c"};
  ScoreRequest b{"m", "t", "a", "bc"};
  CHECK(cache_key(a) != cache_key(b));
}

TEST_CASE("second identical request is served from the cache") {
  ResponseCache cache;
  StubBackend inner({{{" A", -1.0}}});
  CachingBackend backend(cache, &inner);
  const auto first = backend.score(request_of(" A"));
  const auto second = backend.score(request_of(" A"));
  CHECK(first.tokens[0].logprob == second.tokens[0].logprob);
  CHECK(inner.call_count() == 1);
  CHECK(backend.call_count() == 2);
}

TEST_CASE("cache persists across reopen") {
  const auto path = temp_file("cache.jsonl");
  {
    ResponseCache cache(path);
    StubBackend inner({{{" A", -1.0}}});
    CachingBackend backend(cache, &inner);
    (void)backend.score(request_of(" A"));
    CHECK(cache.size() == 1);
  }
  {
    ResponseCache cache(path);
    CHECK(cache.size() == 1);
    StubBackend inner({{{" A", -99.0}}});  // must never be consulted
    CachingBackend backend(cache, &inner);
    const auto response = backend.score(request_of(" A"));
    CHECK(response.tokens[0].logprob == -1.0);
    CHECK(inner.call_count() == 0);
  }
}

TEST_CASE("cache entries carry created_at and survive as append-only lines") {
  const auto path = temp_file("cache_append.jsonl");
  ResponseCache cache(path);
  cache.put("k1", {{{" A", -1.0}}});
  cache.put("k2", {{{" B", -2.0}}});
  cache.put("k1", {{{" A", -123.0}}});  // ignored: entries are immutable
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    const auto entry = nlohmann::json::parse(line);
    CHECK(entry.contains("key"));
    CHECK(entry.contains("created_at"));
    CHECK(entry.contains("response"));
  }
  CHECK(lines == 2);
  CHECK(cache.get("k1")->tokens[0].logprob == -1.0);
}

TEST_CASE("state hash tracks content, not timestamps or insertion order") {
  ResponseCache a;
  a.put("k1", {{{" A", -1.0}}});
  a.put("k2", {{{" B", -2.0}}});
  ResponseCache b;
  b.put("k2", {{{" B", -2.0}}});
  b.put("k1", {{{" A", -1.0}}});
  CHECK(a.state_hash() == b.state_hash());
  ResponseCache c;
  c.put("k1", {{{" A", -1.0}}});
  CHECK(a.state_hash() != c.state_hash());
}

TEST_CASE("offline cache-only backend serves hits and rejects misses") {
  ResponseCache cache;
  cache.put(cache_key(request_of(" A")), {{{" A", -1.0}}});
  CachingBackend backend(cache, nullptr);
  CHECK(backend.score(request_of(" A")).tokens[0].logprob == -1.0);
  CHECK_THROWS_AS((void)backend.score(request_of(" B")), BackendError);
}

TEST_CASE("concurrent cached scoring is safe and consistent") {
  ResponseCache cache;
  StubBackend inner({{{" A", -1.0}}});
  CachingBackend backend(cache, &inner);
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        try {
          if (backend.score(request_of(" A")).tokens[0].logprob != -1.0) {
            ++failures;
          }
        } catch (...) {
          ++failures;
        }
      }
    });
  }
  for (auto& t : threads) {
    t.join();
  }
  CHECK(failures.load() == 0);
  CHECK(cache.size() == 1);
}

TEST_CASE("http backend round-trips and retries transient failures") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  std::string seen_auth;
  server.Post("/score", [&](const httplib::Request& req,
                            httplib::Response& res) {
    ++hits;
    if (req.has_header("Authorization")) {
      seen_auth = req.get_header_value("Authorization");
    }
    if (fail_first.load() > 0) {
      --fail_first;
      res.status = 503;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    const std::string continuation = body["continuation"];
    nlohmann::json tokens = nlohmann::json::array();
    tokens.push_back({{"text", continuation}, {"logprob", -0.25}});
    res.set_content(nlohmann::json{{"tokens", tokens}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("DISTALIGN_TEST_TOKEN", "sekrit", 1);
  HttpBackendOptions options;
  options.endpoint = "http://127.0.0.1:" + std::to_string(port);
  options.auth_env = "DISTALIGN_TEST_TOKEN";
  options.max_attempts = 3;
  options.initial_backoff = std::chrono::milliseconds(5);
  options.max_backoff = std::chrono::milliseconds(10);
  HttpBackend backend(options);

  SUBCASE("clean round trip with bearer auth") {
    const auto response = backend.score(request_of(" A"));
    REQUIRE(response.tokens.size() == 1);
    CHECK(response.tokens[0].text == " A");
    CHECK(response.tokens[0].logprob == -0.25);
    CHECK(seen_auth == "Bearer sekrit");
    CHECK(hits.load() == 1);
  }

  SUBCASE("one 503 then success consumes exactly two attempts") {
    fail_first = 1;
    const auto response = backend.score(request_of(" B"));
    CHECK(response.tokens[0].text == " B");
    CHECK(hits.load() == 2);
  }

  SUBCASE("persistent failure stops after max_attempts") {
    fail_first = 100;
    CHECK_THROWS_AS((void)backend.score(request_of(" C")), BackendError);
    CHECK(hits.load() == 3);
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("http backend rejects token sequences that do not reconstruct") {
  httplib::Server server;
  server.Post("/score", [&](const httplib::Request&, httplib::Response& res) {
    nlohmann::json tokens = nlohmann::json::array();
    tokens.push_back({{"text", "B"}, {"logprob", -0.1}});
    tokens.push_back({{"text", "?"}, {"logprob", -0.1}});
    res.set_content(nlohmann::json{{"tokens", tokens}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpBackendOptions options;
  options.endpoint = "http://127.0.0.1:" + std::to_string(port);
  options.max_attempts = 1;
  HttpBackend backend(options);
  CHECK_THROWS_AS((void)backend.score(request_of(" A")), BackendError);

  server.stop();
  server_thread.join();
}

TEST_CASE("unreachable endpoint surfaces a BackendError") {
  HttpBackendOptions options;
  options.endpoint = "http://127.0.0.1:1";  // nothing listens here
  options.max_attempts = 2;
  options.initial_backoff = std::chrono::milliseconds(1);
  options.timeout = std::chrono::seconds(2);
  HttpBackend backend(options);
  CHECK_THROWS_AS((void)backend.score(request_of(" A")), BackendError);
  CHECK(backend.call_count() == 1);
}

}  // TEST_SUITE

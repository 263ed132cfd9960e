#include "anaquest/generation.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "prompt_templates.hpp"

namespace anaquest::gen {

using nlohmann::json;

std::string to_string(Mode m) {
    return m == Mode::AnaQuest ? "AnaQuest" : "Baseline";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Rough 4-chars-per-token estimate, used only for the truncation budget.
int estimate_tokens(std::size_t chars) {
    return static_cast<int>((chars + 3) / 4);
}

void append_example(std::string& out, int index, const FewShotExample& ex) {
    out += "Example " + std::to_string(index) + "\n";
    out += "Topic: " + ex.topic_title + "\n";
    out += "Learning objective: " + ex.objective + "\n";
    out += "Correct:\n";
    for (int i = 0; i < 3; ++i)
        out += std::to_string(i + 1) + ") " + ex.correct[static_cast<std::size_t>(i)] + "\n";
    out += "Incorrect:\n";
    for (int i = 0; i < 3; ++i)
        out += std::to_string(i + 1) + ") " + ex.incorrect[static_cast<std::size_t>(i)] + "\n";
    out += "\n";
}

}  // namespace

Prompt build_anaquest_prompt(const GenerationRequest& req) {
    if (req.mode != Mode::AnaQuest)
        throw std::invalid_argument("build_anaquest_prompt: request mode is not AnaQuest");
    if (req.few_shot.empty())
        throw std::invalid_argument("build_anaquest_prompt: few-shot example set is missing");
    if (req.responses.empty())
        throw std::invalid_argument("build_anaquest_prompt: formative response list is empty");
    if (req.topic.title.empty())
        throw std::invalid_argument("build_anaquest_prompt: empty topic title");
    for (const auto& r : req.responses) {
        if (r.text.empty())
            throw std::invalid_argument("build_anaquest_prompt: empty formative response text");
    }

    Prompt prompt;
    std::size_t n_responses = req.responses.size();

    const auto render = [&](std::size_t use_responses) {
        std::string out;
        out += templates::kAnaquestFraming;
        out += "\n\nHere are examples:\n\n";
        for (std::size_t i = 0; i < req.few_shot.size(); ++i)
            append_example(out, static_cast<int>(i + 1), req.few_shot[i]);
        out += "Now generate assertions for the following topic.\n\n";
        out += "Topic: " + req.topic.title + "\n";
        out += "Learning objective: " + req.topic.objective.text + "\n\n";
        out += "Student responses to an open-ended question about this topic:\n";
        for (std::size_t i = 0; i < use_responses; ++i)
            out += std::to_string(i + 1) + ". " + req.responses[i].text + "\n";
        out += "\n";
        out += templates::kMisunderstandingInstruction;
        out += "\n\n";
        out += templates::kOutputFormat;
        return out;
    };

    prompt.text = render(n_responses);
    if (req.token_budget > 0 && estimate_tokens(prompt.text.size()) > req.token_budget) {
        while (n_responses > 1 && estimate_tokens(render(n_responses).size()) > req.token_budget)
            --n_responses;
        prompt.text = render(n_responses);
        prompt.warnings.push_back(
            "token budget " + std::to_string(req.token_budget) + " exceeded; truncated to " +
            std::to_string(n_responses) + " of " + std::to_string(req.responses.size()) +
            " student responses");
    }
    return prompt;
}

std::string build_baseline_prompt(const model::Topic& topic, const std::string& course_phrase) {
    if (topic.title.empty())
        throw std::invalid_argument("build_baseline_prompt: empty topic title");
    return "I need to create a final exam for " + course_phrase +
           ". Generate three correct and three incorrect choices, each about 30 words, "
           "for a multiple choice question asking \"Which of the following are correct about " +
           topic.title + "?\"";
}

std::vector<FewShotExample> few_shot_from_json(const json& j) {
    if (!j.is_array()) throw std::runtime_error("few-shot file: expected a JSON array");
    std::vector<FewShotExample> out;
    for (const auto& e : j) {
        FewShotExample ex;
        ex.topic_title = e.at("topic_title").get<std::string>();
        ex.objective = e.at("objective").get<std::string>();
        const auto& c = e.at("correct");
        const auto& i = e.at("incorrect");
        if (c.size() != 3 || i.size() != 3)
            throw std::runtime_error("few-shot example '" + ex.topic_title +
                                     "': needs exactly 3 correct and 3 incorrect texts");
        for (int k = 0; k < 3; ++k) {
            ex.correct[static_cast<std::size_t>(k)] = c.at(k).get<std::string>();
            ex.incorrect[static_cast<std::size_t>(k)] = i.at(k).get<std::string>();
        }
        out.push_back(std::move(ex));
    }
    return out;
}

// --- reply parsing ---

namespace {

enum class HeaderKind { None, Correct, Incorrect };

// A header is the word correct/incorrect (after optional "the"), optionally
// followed by one list noun and "are"/"is", optionally a colon, after
// stripping markdown decoration. Anything else is prose or an item.
HeaderKind header_kind(const std::string& raw, std::string* inline_rest) {
    std::string s = raw;
    // strip decoration: markdown emphasis, heading marks, leading bullets
    std::string stripped;
    for (char c : s) {
        if (c == '*' || c == '#' || c == '_' || c == '>' || c == '`') continue;
        stripped.push_back(c);
    }
    stripped = trim(stripped);
    std::string low = lower(stripped);
    if (low.rfind("the ", 0) == 0) {
        low = low.substr(4);
        stripped = stripped.substr(4);
    }

    HeaderKind kind = HeaderKind::None;
    std::size_t word_len = 0;
    if (low.rfind("incorrect", 0) == 0) {
        kind = HeaderKind::Incorrect;
        word_len = 9;
    } else if (low.rfind("correct", 0) == 0) {
        kind = HeaderKind::Correct;
        word_len = 7;
    } else {
        return HeaderKind::None;
    }
    if (word_len < low.size() && std::isalpha(static_cast<unsigned char>(low[word_len])))
        return HeaderKind::None;  // e.g. "correctness"

    // allow one list noun + optional are/is before the colon
    static const std::set<std::string> nouns = {"assertions", "assertion", "choices", "choice",
                                                "answers",    "answer",    "options", "option",
                                                "statements", "statement", "items",   "item"};
    std::istringstream words(low.substr(word_len));
    std::string w;
    bool noun_seen = false, verb_seen = false;
    while (words >> w) {
        const bool had_colon = !w.empty() && w.back() == ':';
        if (had_colon) w.pop_back();
        const bool is_noun = nouns.count(w) > 0;
        const bool is_verb = (w == "are" || w == "is");
        if (is_noun && !noun_seen && !verb_seen) {
            noun_seen = true;
        } else if (is_verb && !verb_seen) {
            verb_seen = true;
        } else if (w.empty() && had_colon) {
            // bare colon token
        } else {
            return HeaderKind::None;
        }
        if (had_colon) break;
    }

    if (inline_rest) {
        const std::size_t colon = stripped.find(':');
        *inline_rest = colon == std::string::npos ? "" : trim(stripped.substr(colon + 1));
    }
    return kind;
}

// Returns item text if the line starts with a list marker: "1)", "2.",
// "(3)", "-", "*", "+" or a bullet dot; markdown bold around the marker is
// tolerated.
std::optional<std::string> strip_item_marker(const std::string& raw) {
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    };
    const auto skip_bold = [&] {
        while (i + 1 < raw.size() && raw[i] == '*' && raw[i + 1] == '*') i += 2;
    };
    skip_ws();
    skip_bold();
    skip_ws();
    if (i >= raw.size()) return std::nullopt;

    // bullets; \xE2\x80\xA2 is the UTF-8 bullet dot
    if (raw[i] == '-' || raw[i] == '+' ||
        (raw[i] == '*' && i + 1 < raw.size() && raw[i + 1] != '*')) {
        ++i;
        if (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i])))
            return std::nullopt;
        return trim(raw.substr(i));
    }
    if (i + 2 < raw.size() && static_cast<unsigned char>(raw[i]) == 0xE2 &&
        static_cast<unsigned char>(raw[i + 1]) == 0x80 &&
        static_cast<unsigned char>(raw[i + 2]) == 0xA2) {
        return trim(raw.substr(i + 3));
    }

    // numbered: optional '(', 1-2 digits, then ')' or '.'
    bool paren = false;
    if (raw[i] == '(') {
        paren = true;
        ++i;
    }
    std::size_t d = 0;
    while (i + d < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i + d])) && d < 2) ++d;
    if (d == 0) return std::nullopt;
    i += d;
    if (i < raw.size() && (raw[i] == ')' || raw[i] == '.')) {
        ++i;
    } else if (!paren) {
        return std::nullopt;
    }
    skip_bold();
    return trim(raw.substr(i));
}

// Splits inline "1) foo 2) bar 3) baz" content after a header colon.
std::vector<std::string> split_inline_items(const std::string& text) {
    std::vector<std::string> items;
    std::string cur;
    std::size_t i = 0;
    const auto flush = [&] {
        const std::string t = trim(cur);
        if (!t.empty()) items.push_back(t);
        cur.clear();
    };
    while (i < text.size()) {
        // marker = digit(s) followed by ')' or '.', preceded by start/space
        if (std::isdigit(static_cast<unsigned char>(text[i])) &&
            (i == 0 || std::isspace(static_cast<unsigned char>(text[i - 1])))) {
            std::size_t d = i;
            while (d < text.size() && std::isdigit(static_cast<unsigned char>(text[d]))) ++d;
            if (d < text.size() && (text[d] == ')' || text[d] == '.')) {
                flush();
                i = d + 1;
                continue;
            }
        }
        cur.push_back(text[i]);
        ++i;
    }
    flush();
    if (items.empty() && !trim(text).empty()) items.push_back(trim(text));
    return items;
}

std::string strip_emphasis(std::string s) {
    while (s.size() >= 2 && s.rfind("**", 0) == 0) s = trim(s.substr(2));
    while (s.size() >= 2 && s.size() >= 2 && s.compare(s.size() - 2, 2, "**") == 0)
        s = trim(s.substr(0, s.size() - 2));
    return s;
}

}  // namespace

CandidatePool parse_candidate_pool(const std::string& reply, const std::string& topic_id,
                                   model::Source source) {
    std::vector<std::string> correct, incorrect;
    std::vector<std::string>* group = nullptr;

    std::istringstream in(reply);
    std::string line;
    bool item_open = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty()) {
            item_open = false;
            continue;
        }
        std::string inline_rest;
        const HeaderKind kind = header_kind(t, &inline_rest);
        if (kind != HeaderKind::None) {
            group = (kind == HeaderKind::Correct) ? &correct : &incorrect;
            item_open = false;
            for (auto& item : split_inline_items(inline_rest)) group->push_back(item);
            continue;
        }
        if (group == nullptr) continue;  // leading prose
        if (auto item = strip_item_marker(t)) {
            group->push_back(strip_emphasis(*item));
            item_open = true;
        } else if (item_open && !group->empty()) {
            group->back() += " " + strip_emphasis(t);  // wrapped continuation line
        }
        // unmarked line with no open item: trailing prose, ignored
    }

    if (correct.size() != 3)
        throw ParseError("correct count " + std::to_string(correct.size()) + " != 3");
    if (incorrect.size() != 3)
        throw ParseError("incorrect count " + std::to_string(incorrect.size()) + " != 3");

    std::set<std::string> seen;
    for (const auto* g : {&correct, &incorrect}) {
        for (const auto& text : *g) {
            if (text.empty()) throw ParseError("empty assertion text");
            if (!seen.insert(text).second)
                throw ParseError("duplicate assertion text: '" + text + "'");
        }
    }

    CandidatePool pool;
    pool.topic_id = topic_id;
    pool.source = source;
    for (int k = 0; k < 3; ++k) {
        pool.correct[static_cast<std::size_t>(k)] = correct[static_cast<std::size_t>(k)];
        pool.incorrect[static_cast<std::size_t>(k)] = incorrect[static_cast<std::size_t>(k)];
    }
    pool.raw_reply = reply;
    return pool;
}

model::AnalyticalQuestion select_assertions(const CandidatePool& pool, const model::Topic& topic,
                                            const std::string& question_id,
                                            const std::vector<Pick>& picks) {
    if (picks.size() != 3)
        throw std::invalid_argument("select_assertions: exactly 3 picks required, got " +
                                    std::to_string(picks.size()));
    int n_correct = 0, n_incorrect = 0;
    std::set<std::pair<bool, int>> distinct;
    for (const auto& p : picks) {
        if (p.index < 0 || p.index > 2)
            throw std::invalid_argument("select_assertions: pick index " +
                                        std::to_string(p.index) + " out of range");
        if (!distinct.insert({p.from_correct, p.index}).second)
            throw std::invalid_argument("select_assertions: duplicate pick");
        (p.from_correct ? n_correct : n_incorrect)++;
    }
    if (n_correct == 0) throw std::invalid_argument("no correct assertion selected");
    if (n_incorrect == 0) throw std::invalid_argument("no incorrect assertion selected");

    model::AnalyticalQuestion q;
    q.id = question_id;
    q.topic = topic;
    q.source = pool.source;
    char label = 'A';
    for (const auto& p : picks) {
        const auto& text = p.from_correct ? pool.correct[static_cast<std::size_t>(p.index)]
                                          : pool.incorrect[static_cast<std::size_t>(p.index)];
        q.assertions.push_back(model::Assertion{label++, text, p.from_correct});
    }
    return q;
}

// --- clients ---

MockChatClient::MockChatClient(std::vector<ChatReply> script) : script_(std::move(script)) {}

MockChatClient::MockChatClient(std::map<std::string, std::string> replies_by_key,
                               std::string default_reply)
    : by_key_(std::move(replies_by_key)), default_reply_(std::move(default_reply)) {}

ChatReply MockChatClient::complete_once(const std::string&, const std::string& context_key) {
    ++calls_;
    if (!script_.empty()) {
        const std::size_t i = std::min(next_, script_.size() - 1);
        ++next_;
        return script_[i];
    }
    const auto it = by_key_.find(context_key);
    if (it != by_key_.end()) return ChatReply{true, false, it->second, ""};
    if (!default_reply_.empty()) return ChatReply{true, false, default_reply_, ""};
    return ChatReply{false, false, "", "mock: no reply configured for '" + context_key + "'"};
}

HttpChatClient::HttpChatClient(ClientConfig cfg) : cfg_(std::move(cfg)) {}

ChatReply HttpChatClient::complete_once(const std::string& prompt, const std::string&) {
    // split endpoint into host[:port] and path
    std::string rest = cfg_.endpoint;
    const auto scheme_pos = rest.find("://");
    if (scheme_pos == std::string::npos)
        return ChatReply{false, false, "", "bad endpoint URL: " + cfg_.endpoint};
    const std::string scheme = rest.substr(0, scheme_pos);
    if (scheme != "http")
        return ChatReply{false, false, "",
                         "unsupported endpoint scheme '" + scheme + "' (http only)"};
    rest = rest.substr(scheme_pos + 3);
    const auto slash = rest.find('/');
    const std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

    httplib::Client cli(("http://" + hostport).c_str());
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const json body = {{"model", cfg_.model},
                       {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
    const auto res = cli.Post(path.c_str(), headers, body.dump(), "application/json");
    if (!res) return ChatReply{false, true, "", "network failure: " + to_string(res.error())};
    if (res->status != 200) {
        const bool retryable = res->status == 429 || res->status >= 500;
        return ChatReply{false, retryable, "",
                         "status " + std::to_string(res->status) + ": " + res->body};
    }
    try {
        const json reply = json::parse(res->body);
        const std::string text =
            reply.at("choices").at(0).at("message").at("content").get<std::string>();
        return ChatReply{true, false, text, ""};
    } catch (const std::exception& e) {
        return ChatReply{false, false, "", std::string("malformed completion response: ") + e.what()};
    }
}

std::unique_ptr<ChatClient> make_client(const ClientConfig& cfg) {
    if (cfg.endpoint == "mock" || !cfg.mock_replies_path.empty()) {
        std::ifstream in(cfg.mock_replies_path);
        if (!in) throw std::runtime_error(cfg.mock_replies_path + ": cannot open mock replies");
        json j;
        in >> j;
        std::map<std::string, std::string> by_key;
        if (j.contains("replies")) {
            for (const auto& [k, v] : j.at("replies").items()) by_key[k] = v.get<std::string>();
        }
        return std::make_unique<MockChatClient>(std::move(by_key), j.value("default", ""));
    }
    return std::make_unique<HttpChatClient>(cfg);
}

AuditLog::AuditLog(std::string path, std::string fixed_timestamp)
    : path_(std::move(path)), fixed_timestamp_(std::move(fixed_timestamp)) {}

namespace {

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

void AuditLog::append(const std::string& topic_id, Mode mode, const std::string& prompt,
                      const std::string& reply) {
    const json rec = {{"timestamp", fixed_timestamp_.empty() ? utc_now_iso8601() : fixed_timestamp_},
                      {"topic_id", topic_id},
                      {"mode", to_string(mode)},
                      {"prompt", prompt},
                      {"reply", reply}};
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error(path_ + ": cannot open audit log for append");
    out << rec.dump() << "\n";
}

std::string complete(ChatClient& client, const std::string& prompt, const RetryPolicy& policy,
                     AuditLog* audit, const std::string& topic_id, Mode mode) {
    std::string last_error;
    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0 && policy.backoff_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(policy.backoff_ms << (attempt - 1)));
        }
        const ChatReply r = client.complete_once(prompt, topic_id);
        if (r.ok) {
            if (r.text.empty()) {
                last_error = "empty reply";
                continue;
            }
            if (audit) audit->append(topic_id, mode, prompt, r.text);
            return r.text;
        }
        last_error = r.error;
        if (!r.retryable) break;
    }
    throw std::runtime_error("completion failed for topic '" + topic_id + "': " + last_error);
}

// --- file formats ---

std::vector<FormativeResponse> formative_from_json(const json& j) {
    if (!j.is_array()) throw std::runtime_error("formative responses: expected a JSON array");
    std::vector<FormativeResponse> out;
    for (const auto& e : j) {
        FormativeResponse r;
        r.topic_id = e.at("topic_id").get<std::string>();
        r.student_id = e.at("student_id").get<std::string>();
        r.text = e.at("text").get<std::string>();
        if (r.text.empty())
            throw std::runtime_error("formative response for topic '" + r.topic_id +
                                     "', student '" + r.student_id + "': empty text");
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<FormativeResponse> load_formative(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
        return formative_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

json pool_to_json(const CandidatePool& pool) {
    return json{{"topic_id", pool.topic_id},
                {"source", model::to_string(pool.source)},
                {"correct", pool.correct},
                {"incorrect", pool.incorrect},
                {"raw_reply", pool.raw_reply}};
}

CandidatePool pool_from_json(const json& j) {
    CandidatePool pool;
    pool.topic_id = j.at("topic_id").get<std::string>();
    pool.source = model::source_from_string(j.at("source").get<std::string>());
    const auto& c = j.at("correct");
    const auto& i = j.at("incorrect");
    if (c.size() != 3 || i.size() != 3)
        throw std::runtime_error("pool for topic '" + pool.topic_id +
                                 "': needs exactly 3 correct and 3 incorrect texts");
    std::set<std::string> seen;
    for (int k = 0; k < 3; ++k) {
        pool.correct[static_cast<std::size_t>(k)] = c.at(k).get<std::string>();
        pool.incorrect[static_cast<std::size_t>(k)] = i.at(k).get<std::string>();
    }
    for (const auto& t : pool.correct)
        if (t.empty() || !seen.insert(t).second)
            throw std::runtime_error("pool for topic '" + pool.topic_id +
                                     "': empty or duplicate assertion text");
    for (const auto& t : pool.incorrect)
        if (t.empty() || !seen.insert(t).second)
            throw std::runtime_error("pool for topic '" + pool.topic_id +
                                     "': empty or duplicate assertion text");
    pool.raw_reply = j.value("raw_reply", "");
    return pool;
}

CandidatePool load_pool(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open");
    json j;
    try {
        in >> j;
        return pool_from_json(j);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace anaquest::gen

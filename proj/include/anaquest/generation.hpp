#pragma once

#include <array>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "anaquest/model.hpp"

namespace anaquest::gen {

struct FormativeResponse {
    std::string topic_id;
    std::string student_id;
    std::string text;  // free-text answer, non-empty
};

struct FewShotExample {
    std::string topic_title;
    std::string objective;
    std::array<std::string, 3> correct;
    std::array<std::string, 3> incorrect;
};

enum class Mode { AnaQuest, Baseline };
std::string to_string(Mode m);

struct GenerationRequest {
    model::Topic topic;
    Mode mode = Mode::AnaQuest;
    std::vector<FormativeResponse> responses;  // >= 1 for AnaQuest mode
    std::vector<FewShotExample> few_shot;      // required for AnaQuest mode
    // Rough budget in tokens (~4 chars each); 0 = unlimited. Responses are
    // embedded verbatim; only this budget can truncate them, with a warning.
    int token_budget = 0;
};

struct Prompt {
    std::string text;
    std::vector<std::string> warnings;
};

// Deterministic template; see prompt_templates.cpp for the wording.
Prompt build_anaquest_prompt(const GenerationRequest& req);

const std::string& default_course_phrase();

// The fixed baseline prompt with [TOPIC] substituted; the course phrase is
// configurable and defaults to the graduate HCI wording.
std::string build_baseline_prompt(const model::Topic& topic,
                                  const std::string& course_phrase = default_course_phrase());

// Shipped default few-shot set: five synthetic examples, placeholders for
// user-supplied configuration.
const std::vector<FewShotExample>& default_few_shot();
std::vector<FewShotExample> few_shot_from_json(const nlohmann::json& j);

struct CandidatePool {
    std::string topic_id;
    model::Source source = model::Source::AnaQuest;
    std::array<std::string, 3> correct;
    std::array<std::string, 3> incorrect;
    std::string raw_reply;  // verbatim model output kept for audit
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Extracts 3 correct + 3 incorrect assertion texts from a labeled-list
// reply. Tolerates leading/trailing prose, numbered or bulleted items and
// markdown-decorated case-insensitive "Correct:"/"Incorrect:" headers.
// Count mismatches and duplicate texts raise ParseError.
CandidatePool parse_candidate_pool(const std::string& reply, const std::string& topic_id,
                                   model::Source source);

struct Pick {
    bool from_correct;  // which pool group
    int index;          // 0..2 within the group
};

// Builds the exam question from three picked pool entries, labels A/B/C in
// pick order. Requires at least one correct and one incorrect pick.
model::AnalyticalQuestion select_assertions(const CandidatePool& pool, const model::Topic& topic,
                                            const std::string& question_id,
                                            const std::vector<Pick>& picks);

// --- chat-completion client ---

struct ChatReply {
    bool ok = false;
    bool retryable = false;
    std::string text;
    std::string error;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    // context_key identifies the request (topic id); HTTP clients ignore it.
    virtual ChatReply complete_once(const std::string& prompt, const std::string& context_key) = 0;
};

// Scripted client for hermetic tests and offline runs. Replies are served
// per context key when configured, else from the script in order; the last
// script entry repeats once the script is exhausted.
class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(std::vector<ChatReply> script);
    explicit MockChatClient(std::map<std::string, std::string> replies_by_key,
                            std::string default_reply = "");
    ChatReply complete_once(const std::string& prompt, const std::string& context_key) override;
    int calls() const { return calls_; }

private:
    std::vector<ChatReply> script_;
    std::size_t next_ = 0;
    std::map<std::string, std::string> by_key_;
    std::string default_reply_;
    int calls_ = 0;
};

struct ClientConfig {
    std::string endpoint;  // http://host[:port]/path of an OpenAI-style API
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";
    int max_retries = 3;   // retries after the first attempt
    int backoff_ms = 250;  // doubled per retry
    // When set, audit records use this timestamp instead of the clock, so
    // reruns are byte-identical.
    std::string fixed_timestamp;
    // mock mode: path of a JSON replies file ({"replies":{id:text}, "default":text})
    std::string mock_replies_path;
};

// POSTs {model, messages:[{role:"user",content:prompt}]} and returns
// choices[0].message.content. API key read from the configured env var.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(ClientConfig cfg);
    ChatReply complete_once(const std::string& prompt, const std::string& context_key) override;

private:
    ClientConfig cfg_;
};

std::unique_ptr<ChatClient> make_client(const ClientConfig& cfg);

// Append-only newline-delimited audit records
// {timestamp, topic_id, mode, prompt, reply}; appends are serialized.
class AuditLog {
public:
    explicit AuditLog(std::string path, std::string fixed_timestamp = "");
    void append(const std::string& topic_id, Mode mode, const std::string& prompt,
                const std::string& reply);

private:
    std::mutex mu_;
    std::string path_;
    std::string fixed_timestamp_;
};

struct RetryPolicy {
    int max_retries = 3;
    int backoff_ms = 250;
};

// Runs the client with retry/backoff on transient failures and records the
// successful request/response pair. Throws std::runtime_error after the
// retry budget is exhausted or on an empty reply.
std::string complete(ChatClient& client, const std::string& prompt, const RetryPolicy& policy,
                     AuditLog* audit, const std::string& topic_id, Mode mode);

// --- file formats ---

std::vector<FormativeResponse> formative_from_json(const nlohmann::json& j);
std::vector<FormativeResponse> load_formative(const std::string& path);

nlohmann::json pool_to_json(const CandidatePool& pool);
CandidatePool pool_from_json(const nlohmann::json& j);
CandidatePool load_pool(const std::string& path);

}  // namespace anaquest::gen

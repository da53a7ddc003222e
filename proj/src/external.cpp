#include "tabctx/external.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "tabctx/error.hpp"
#include "tabctx/schema.hpp"

extern char** environ;

namespace tabctx {

using json = nlohmann::json;

// ---- child process -------------------------------------------------------------

ChildProcess::ChildProcess(const std::string& command) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { std::signal(SIGPIPE, SIG_IGN); });

    int in_pipe[2], out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw BackendError(std::string("pipe: ") + std::strerror(errno));
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw BackendError(std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        throw BackendError("cannot launch backend '" + command + "': " + std::strerror(rc));
    }
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

ChildProcess::~ChildProcess() {
    close_stdin();
    if (pid_ > 0) {
        // Give a well-behaved backend a moment to exit after shutdown.
        for (int i = 0; i < 20; ++i) {
            if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
                pid_ = -1;
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        kill();
    }
    if (from_child_ >= 0) ::close(from_child_);
}

void ChildProcess::close_stdin() {
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
    }
}

void ChildProcess::kill() {
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        waitpid(pid_, nullptr, 0);
        pid_ = -1;
    }
}

void ChildProcess::write_line(const std::string& line) {
    if (to_child_ < 0) throw BackendError("backend stdin is closed");
    std::string data = line;
    data.push_back('\n');
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t w = ::write(to_child_, data.data() + off, data.size() - off);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("backend write failed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(w);
    }
}

std::string ChildProcess::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw BackendError("backend timed out after " + std::to_string(timeout.count()) + " ms");
        pollfd pfd{from_child_, POLLIN, 0};
        const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("poll failed: ") + std::strerror(errno));
        }
        if (pr == 0) continue;
        char chunk[65536];
        const ssize_t r = ::read(from_child_, chunk, sizeof chunk);
        if (r < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("backend read failed: ") + std::strerror(errno));
        }
        if (r == 0) throw BackendError("backend exited unexpectedly");
        buffer_.append(chunk, static_cast<std::size_t>(r));
    }
}

// ---- wire encoding ------------------------------------------------------------------

json wire_schema(const Table& table) {
    json s = json::array();
    for (auto c : table.feature_columns()) {
        const auto& col = table.columns()[c];
        json e = {{"name", col.name}, {"kind", std::string(to_string(col.kind))}};
        if (col.kind == ColumnKind::Timestamp) e["date_format"] = col.date_format;
        s.push_back(std::move(e));
    }
    return s;
}

json wire_rows(const PredictorInput& input) {
    if (!input.has_raw()) throw ContractError("external predictors need raw rows");
    const auto& t = *input.raw;
    const auto features = t.feature_columns();
    json rows = json::array();
    for (auto r : input.raw_rows) {
        json row = json::array();
        for (auto c : features) {
            const auto& col = t.columns()[c];
            if (col.is_missing(r)) {
                row.push_back(nullptr);
                continue;
            }
            switch (col.kind) {
                case ColumnKind::Numeric: row.push_back(col.numbers[r]); break;
                case ColumnKind::Categorical: row.push_back(col.strings[r]); break;
                case ColumnKind::Timestamp: row.push_back(format_timestamp(col.numbers[r], col.date_format)); break;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

json id_array(const PredictorInput& in) {
    json ids = json::array();
    for (auto id : in.ids) ids.push_back(id.value);
    return ids;
}

}  // namespace

// ---- session ----------------------------------------------------------------------------

BackendSession::BackendSession(const ExternalBackendDescriptor& descriptor)
    : descriptor_(descriptor), process_(std::make_unique<ChildProcess>(descriptor.command)) {
    const auto ack = request({{"type", "hello"},
                              {"protocol", descriptor_.protocol_version},
                              {"client", "tabctx"},
                              {"client_version", "0.1.0"}},
                             "hello_ack", descriptor_.handshake_timeout);
    if (!ack.contains("protocol") || !ack["protocol"].is_number_integer() ||
        ack["protocol"].get<int>() != descriptor_.protocol_version)
        throw BackendError("backend protocol mismatch: expected " + std::to_string(descriptor_.protocol_version) +
                           ", got " + ack.value("protocol", json()).dump());
    backend_.name = ack.value("name", std::string{});
    backend_.version = ack.value("version", std::string{});
}

BackendSession::~BackendSession() {
    try {
        shutdown();
    } catch (...) {
    }
}

json BackendSession::request(const json& message, std::string_view expect, std::chrono::milliseconds timeout) {
    process_->write_line(message.dump());
    const std::string raw = process_->read_line(timeout);
    json reply;
    try {
        reply = json::parse(raw);
    } catch (const json::exception&) {
        spdlog::warn("backend '{}' sent a malformed reply: {}", descriptor_.name, raw);
        throw ProtocolError("malformed backend reply: " + raw);
    }
    if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string()) {
        spdlog::warn("backend '{}' sent a reply without a type: {}", descriptor_.name, raw);
        throw ProtocolError("backend reply without type: " + raw);
    }
    const auto type = reply["type"].get<std::string>();
    if (type == "error") throw BackendError("backend error: " + reply.value("message", raw));
    if (type != expect) {
        spdlog::warn("backend '{}' answered '{}' where '{}' was expected: {}", descriptor_.name, type, expect, raw);
        throw ProtocolError("expected '" + std::string(expect) + "', got: " + raw);
    }
    return reply;
}

void BackendSession::condition(const PredictorInput& window) {
    if (window.labels.size() != window.size()) throw ContractError("window rows need labels");
    const json msg = {{"type", "condition"},
                      {"schema", wire_schema(*window.raw)},
                      {"ids", id_array(window)},
                      {"rows", wire_rows(window)},
                      {"labels", window.labels}};
    const auto reply = request(msg, "conditioned", descriptor_.batch_timeout);
    const auto expected = context_hash(window.ids, window.labels);
    const auto got = reply.value("context_hash", std::string{});
    if (got != expected)
        throw ProtocolError("context hash mismatch: backend " + got + ", client " + expected);
    conditioned_ = true;
}

std::vector<double> BackendSession::predict(const PredictorInput& queries) {
    std::vector<double> out;
    out.reserve(queries.size());
    const std::size_t bs = std::max<std::size_t>(1, descriptor_.batch_size);
    for (std::size_t start = 0; start < queries.size(); start += bs) {
        const std::size_t end = std::min(queries.size(), start + bs);
        PredictorInput batch;
        batch.raw = queries.raw;
        batch.ids.assign(queries.ids.begin() + static_cast<std::ptrdiff_t>(start),
                         queries.ids.begin() + static_cast<std::ptrdiff_t>(end));
        batch.raw_rows.assign(queries.raw_rows.begin() + static_cast<std::ptrdiff_t>(start),
                              queries.raw_rows.begin() + static_cast<std::ptrdiff_t>(end));
        const json msg = {{"type", "predict"}, {"ids", id_array(batch)}, {"rows", wire_rows(batch)}};
        const auto reply = request(msg, "proba", descriptor_.batch_timeout);
        const auto& values = reply.contains("values") ? reply["values"] : json();
        if (!values.is_array() || values.size() != end - start)
            throw ProtocolError("proba reply has " + std::to_string(values.is_array() ? values.size() : 0) +
                                " values for " + std::to_string(end - start) + " rows: " + reply.dump());
        for (const auto& v : values) {
            if (!v.is_number()) throw ProtocolError("non-numeric probability: " + reply.dump());
            const double p = v.get<double>();
            if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("probability outside [0,1]: " + v.dump());
            out.push_back(p);
        }
    }
    return out;
}

void BackendSession::shutdown() {
    if (!process_) return;
    try {
        process_->write_line(json{{"type", "shutdown"}}.dump());
    } catch (const BackendError&) {
    }
    process_.reset();
}

std::vector<double> external_predict(const ExternalBackendDescriptor& descriptor, const PredictorInput& window,
                                     const PredictorInput& queries, PredictorIdentity* backend) {
    BackendSession session(descriptor);
    session.condition(window);
    auto p = session.predict(queries);
    if (backend) *backend = session.backend();
    session.shutdown();
    return p;
}

namespace {

class ExternalState final : public ConditionedPredictor {
public:
    ExternalState(const ExternalBackendDescriptor& d, const PredictorInput& window)
        : session_(std::make_unique<BackendSession>(d)) {
        session_->condition(window);
    }
    std::vector<double> predict_proba(const PredictorInput& q) const override { return session_->predict(q); }
    std::optional<PredictorIdentity> backend_identity() const override { return session_->backend(); }

private:
    std::unique_ptr<BackendSession> session_;
};

}  // namespace

std::unique_ptr<ConditionedPredictor> ExternalPredictor::condition(const PredictorInput& window) const {
    return std::make_unique<ExternalState>(descriptor_, window);
}

}  // namespace tabctx

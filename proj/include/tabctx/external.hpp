#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <sys/types.h>

#include <json.hpp>

#include "tabctx/predictors.hpp"

namespace tabctx {

inline constexpr int kProtocolVersion = 1;

struct ExternalBackendDescriptor {
    std::string name;     // label used in plans and records
    std::string command;  // launched through /bin/sh -c
    int protocol_version = kProtocolVersion;
    std::chrono::milliseconds handshake_timeout{10'000};
    std::chrono::milliseconds batch_timeout{120'000};
    std::size_t batch_size = 4096;
};

// Child process with its stdin/stdout connected to pipes. Killed on destruction.
class ChildProcess {
public:
    explicit ChildProcess(const std::string& command);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    void write_line(const std::string& line);
    // Next line without the newline; BackendError on EOF or timeout.
    std::string read_line(std::chrono::milliseconds timeout);
    void close_stdin();
    void kill();
    pid_t pid() const noexcept { return pid_; }

private:
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

// Protocol client for one backend session: hello, condition, predict, shutdown.
class BackendSession {
public:
    explicit BackendSession(const ExternalBackendDescriptor& descriptor);
    ~BackendSession();

    const PredictorIdentity& backend() const noexcept { return backend_; }
    // Sends the window; verifies the backend's context hash against ours.
    void condition(const PredictorInput& window);
    std::vector<double> predict(const PredictorInput& queries);
    void shutdown();

private:
    nlohmann::json request(const nlohmann::json& message, std::string_view expect,
                           std::chrono::milliseconds timeout);

    ExternalBackendDescriptor descriptor_;
    std::unique_ptr<ChildProcess> process_;
    PredictorIdentity backend_;
    bool conditioned_ = false;
};

// Row serialization used on the wire: schema excludes the label column;
// missing entries are null, timestamps are strings in the column's format.
nlohmann::json wire_schema(const Table& table);
nlohmann::json wire_rows(const PredictorInput& input);

std::vector<double> external_predict(const ExternalBackendDescriptor& descriptor, const PredictorInput& window,
                                     const PredictorInput& queries, PredictorIdentity* backend = nullptr);

// Launches one backend process per condition() call.
class ExternalPredictor final : public Predictor {
public:
    explicit ExternalPredictor(ExternalBackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {}
    PredictorIdentity identity() const override { return {descriptor_.name, "external"}; }
    std::unique_ptr<ConditionedPredictor> condition(const PredictorInput& window) const override;

private:
    ExternalBackendDescriptor descriptor_;
};

}  // namespace tabctx

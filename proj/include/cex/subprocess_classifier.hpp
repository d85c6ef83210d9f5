#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "cex/classifier.hpp"
#include "cex/detail/base64.hpp"
#include "cex/error.hpp"
#include "cex/image.hpp"

namespace cex {

namespace detail {

inline void ignore_sigpipe_once() {
  // A dead child otherwise kills the whole process on write().
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

/// Wire-protocol client for external models. One JSON object per line:
///   request:  {"id": u64, "width": int, "height": int, "pixels": "<base64 RGB8>"}
///   response: {"id": same u64, "label": int, "confidence": float in [0,1]}
/// Requests go to the child's stdin, responses come back on its stdout,
/// stderr passes through for diagnostics. Calls are serialized internally
/// (one in-flight request) behind a thread-safe facade.
class SubprocessClassifier final : public Classifier {
 public:
  SubprocessClassifier(std::string command, std::chrono::milliseconds timeout)
      : command_(std::move(command)), timeout_(timeout) {
    ignore_sigpipe_once();
    spawn();
  }

  ~SubprocessClassifier() override { shutdown(); }

  SubprocessClassifier(const SubprocessClassifier&) = delete;
  SubprocessClassifier& operator=(const SubprocessClassifier&) = delete;

 private:
  ClassifierVerdict do_classify(const Image& image) override {
    std::lock_guard lock(mutex_);
    if (broken_) {
      throw ClassifierError(ClassifierError::Kind::ProviderFailure,
                            "external: provider is in a failed state");
    }
    const std::uint64_t id = next_id_++;
    nlohmann::json request = {
        {"id", id},
        {"width", image.width()},
        {"height", image.height()},
        {"pixels", base64_encode(image.bytes())},
    };
    write_line(request.dump());

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    const std::string line = read_line(deadline);

    nlohmann::json response = nlohmann::json::parse(line, nullptr, false);
    if (response.is_discarded() || !response.is_object()) {
      fail();
      throw ClassifierError(ClassifierError::Kind::ProtocolViolation,
                            "external: non-JSON line on stdout: " + line.substr(0, 120));
    }
    if (!response.contains("id") || !response["id"].is_number_unsigned() ||
        response["id"].get<std::uint64_t>() != id) {
      fail();
      throw ClassifierError(ClassifierError::Kind::ProtocolViolation,
                            "external: response id does not match request id " +
                                std::to_string(id));
    }
    if (!response.contains("label") || !response["label"].is_number_integer() ||
        !response.contains("confidence") || !response["confidence"].is_number()) {
      fail();
      throw ClassifierError(ClassifierError::Kind::ProtocolViolation,
                            "external: response missing label/confidence");
    }
    const double confidence = response["confidence"].get<double>();
    if (confidence < 0.0 || confidence > 1.0) {
      fail();
      throw ClassifierError(ClassifierError::Kind::ProtocolViolation,
                            "external: confidence outside [0,1]");
    }
    return ClassifierVerdict{response["label"].get<int>(), confidence};
  }

  void spawn() {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) {
      throw ClassifierError(ClassifierError::Kind::SpawnFailure, "external: pipe() failed");
    }
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw ClassifierError(ClassifierError::Kind::SpawnFailure, "external: pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      throw ClassifierError(ClassifierError::Kind::SpawnFailure, "external: fork() failed");
    }
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    stdin_fd_ = to_child[1];
    stdout_fd_ = from_child[0];
  }

  void write_line(std::string line) {
    line.push_back('\n');
    std::size_t written = 0;
    while (written < line.size()) {
      const ssize_t n = ::write(stdin_fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_child_gone("write to provider failed");
      }
      written += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::steady_clock::time_point deadline) {
    for (;;) {
      const auto newline = buffer_.find('\n');
      if (newline != std::string::npos) {
        std::string line = buffer_.substr(0, newline);
        buffer_.erase(0, newline + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }

      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        fail();
        throw ClassifierError(ClassifierError::Kind::Timeout,
                              "external: no response within timeout");
      }
      struct pollfd pfd {
        stdout_fd_, POLLIN, 0
      };
      const int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw_child_gone("poll on provider stdout failed");
      }
      if (rc == 0) {
        fail();
        throw ClassifierError(ClassifierError::Kind::Timeout,
                              "external: no response within timeout");
      }
      char chunk[4096];
      const ssize_t n = ::read(stdout_fd_, chunk, sizeof(chunk));
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_child_gone("read from provider failed");
      }
      if (n == 0) throw_child_gone("provider closed stdout");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  [[noreturn]] void throw_child_gone(const std::string& context) {
    fail();
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      reaped_ = true;
      if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
        throw ClassifierError(ClassifierError::Kind::SpawnFailure,
                              "external: command could not be executed: " + command_);
      }
      throw ClassifierError(ClassifierError::Kind::ProviderFailure,
                            "external: provider exited mid-call (" + context + ")");
    }
    throw ClassifierError(ClassifierError::Kind::ProviderFailure, "external: " + context);
  }

  void fail() noexcept { broken_ = true; }

  void shutdown() noexcept {
    if (stdin_fd_ >= 0) ::close(stdin_fd_);
    if (stdout_fd_ >= 0) ::close(stdout_fd_);
    stdin_fd_ = stdout_fd_ = -1;
    if (pid_ > 0 && !reaped_) {
      int status = 0;
      // Closing stdin is the shutdown signal; give the child a moment.
      for (int i = 0; i < 20; ++i) {
        if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
        ::usleep(10'000);
      }
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
  }

  std::string command_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  bool broken_ = false;
  bool reaped_ = false;
  std::uint64_t next_id_ = 1;
  std::string buffer_;
};

}  // namespace detail

/// Launches `command` via /bin/sh and speaks the NDJSON protocol with it.
inline ClassifierHandle make_external_classifier(
    const std::string& command,
    std::chrono::milliseconds timeout = std::chrono::milliseconds(30'000)) {
  if (command.empty()) {
    throw ClassifierError(ClassifierError::Kind::SpawnFailure, "external: empty command");
  }
  return std::make_shared<detail::SubprocessClassifier>(command, timeout);
}

}  // namespace cex

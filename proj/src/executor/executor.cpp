#include "grraf/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "grraf/errors.hpp"
#include "grraf/graph_io.hpp"
#include "grraf/script.hpp"

extern char** environ;

namespace grraf {

using Clock = std::chrono::steady_clock;

std::string_view to_string(Backend backend) {
    return backend == Backend::embedded ? "embedded" : "external";
}

Backend parse_backend(std::string_view name) {
    if (name == "embedded") return Backend::embedded;
    if (name == "external") return Backend::external;
    throw ConfigurationError("unknown backend '" + std::string(name) + "' (expected embedded or external)");
}

std::string_view to_string(ArtifactKind kind) {
    return kind == ArtifactKind::code_template ? "template" : "final";
}

nlohmann::json artifact_to_json(const CodeArtifact& artifact) {
    return {{"kind", std::string(to_string(artifact.kind))},
            {"source", artifact.source},
            {"iteration", artifact.iteration},
            {"exchange", artifact.exchange},
            {"backend", std::string(to_string(artifact.target))}};
}

std::string_view to_string(ExecStatus status) {
    switch (status) {
        case ExecStatus::ok: return "ok";
        case ExecStatus::execution_error: return "execution_error";
        case ExecStatus::timed_out: return "timed_out";
    }
    return "ok";
}

nlohmann::json result_to_json(const ExecutionResult& result) {
    nlohmann::json j = {{"status", std::string(to_string(result.status))},
                        {"wall_ms", std::chrono::duration<double, std::milli>(result.wall_time).count()}};
    if (result.status == ExecStatus::ok) {
        j["answer"] = result.answer;
    } else {
        j["error"] = result.error_message;
    }
    return j;
}

ExternalRuntime ExternalRuntime::from_environment() {
    ExternalRuntime runtime;
    if (const char* value = std::getenv("GRRAF_SHIM")) {
        std::istringstream words(value);
        std::string word;
        while (words >> word) runtime.command.push_back(word);
    }
    return runtime;
}

namespace {

Clock::time_point deadline_after(Clock::time_point start, std::chrono::nanoseconds t) {
    if (t >= Clock::time_point::max() - start) return Clock::time_point::max();
    return start + t;
}

std::string seconds_text(std::chrono::nanoseconds t) {
    std::ostringstream out;
    out << std::chrono::duration<double>(t).count() << " s";
    return out.str();
}

}  // namespace

ExecutionResult execute_embedded(std::string_view code, const PropertyGraph& g, std::chrono::nanoseconds t,
                                 std::stop_token stop) {
    ExecutionResult result;
    const auto start = Clock::now();
    try {
        auto program = script::Program::parse(code);
        script::RunLimits limits;
        limits.deadline = deadline_after(start, t);
        limits.stop = std::move(stop);
        result.answer = program.run(g, limits);
        result.status = ExecStatus::ok;
    } catch (const script::ScriptError& e) {
        result.status = ExecStatus::execution_error;
        result.error_message = e.what();
    } catch (const script::Interrupted&) {
        result.status = ExecStatus::timed_out;
        result.error_message = "execution exceeded the time limit of " + seconds_text(t);
    } catch (const std::bad_alloc&) {
        result.status = ExecStatus::execution_error;
        result.error_message = "runtime error: out of memory";
    }
    result.wall_time = Clock::now() - start;
    return result;
}

namespace {

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] {
        struct sigaction action {};
        action.sa_handler = SIG_IGN;
        sigemptyset(&action.sa_mask);
        sigaction(SIGPIPE, &action, nullptr);
    });
}

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Fd& operator=(Fd&& other) noexcept {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read;
    Fd write;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw ConfigurationError(std::string("pipe2 failed: ") + std::strerror(errno));
    return Pipe{Fd(fds[0]), Fd(fds[1])};
}

void set_nonblocking(int fd) {
    int flags = ::fcntl(fd, F_GETFL);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

bool executable_exists(const std::string& name) {
    if (name.find('/') != std::string::npos) return ::access(name.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (path == nullptr) return false;
    std::string_view dirs(path);
    while (!dirs.empty()) {
        auto colon = dirs.find(':');
        std::string dir(dirs.substr(0, colon));
        if (dir.empty()) dir = ".";
        if (::access((dir + "/" + name).c_str(), X_OK) == 0) return true;
        if (colon == std::string_view::npos) break;
        dirs.remove_prefix(colon + 1);
    }
    return false;
}

/// Kills the group, then reaps the child. Safe to call more than once.
void kill_and_reap(pid_t pid, bool& reaped, int& wait_status) {
    ::kill(-pid, SIGKILL);
    if (!reaped) {
        while (::waitpid(pid, &wait_status, 0) < 0 && errno == EINTR) {
        }
        reaped = true;
    }
}

std::string last_nonempty_line(const std::string& text) {
    std::size_t end = text.find_last_not_of(" \t\r\n");
    if (end == std::string::npos) return {};
    std::size_t start = text.rfind('\n', end);
    start = start == std::string::npos ? 0 : start + 1;
    return text.substr(start, end - start + 1);
}

std::string clip(const std::string& text, std::size_t limit = 4000) {
    if (text.size() <= limit) return text;
    return text.substr(0, limit) + "... [" + std::to_string(text.size() - limit) + " more bytes]";
}

}  // namespace

ExecutionResult execute_external(std::string_view code, const std::filesystem::path& graph_path,
                                 std::chrono::nanoseconds t, const ExternalRuntime& runtime) {
    if (runtime.command.empty()) throw ConfigurationError("no external runtime configured (set GRRAF_SHIM)");
    if (!executable_exists(runtime.command.front()))
        throw ConfigurationError("external runtime not found: " + runtime.command.front());
    ignore_sigpipe();

    nlohmann::json request = {{"code", std::string(code)},
                              {"graph_path", graph_path.string()},
                              {"time_limit_s", std::chrono::duration<double>(t).count()}};
    const std::string payload = request.dump() + "\n";

    Pipe in = make_pipe();
    Pipe out = make_pipe();
    Pipe err = make_pipe();

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in.read.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out.write.get(), STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, err.write.get(), STDERR_FILENO);
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF | POSIX_SPAWN_SETSIGMASK);
    posix_spawnattr_setpgroup(&attr, 0);
    sigset_t all, none;
    sigfillset(&all);
    sigemptyset(&none);
    posix_spawnattr_setsigdefault(&attr, &all);
    posix_spawnattr_setsigmask(&attr, &none);

    std::vector<char*> argv;
    for (const auto& word : runtime.command) argv.push_back(const_cast<char*>(word.c_str()));
    argv.push_back(nullptr);

    const auto start = Clock::now();
    const auto deadline = deadline_after(start, t);
    pid_t pid = 0;
    int rc = posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    if (rc != 0)
        throw ConfigurationError("cannot start external runtime " + runtime.command.front() + ": " +
                                 std::strerror(rc));

    in.read.reset();
    out.write.reset();
    err.write.reset();
    set_nonblocking(in.write.get());
    set_nonblocking(out.read.get());
    set_nonblocking(err.read.get());

    std::string stdout_text, stderr_text;
    std::size_t written = 0;
    bool reaped = false;
    int wait_status = 0;
    bool timed_out = false;
    char buffer[65536];

    while (out.read || err.read) {
        auto now = Clock::now();
        if (now >= deadline) {
            timed_out = true;
            break;
        }
        auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
        int timeout_ms = static_cast<int>(std::min<long long>(remaining, 100));

        pollfd fds[3];
        int count = 0;
        int in_slot = -1, out_slot = -1, err_slot = -1;
        if (in.write) {
            fds[count] = {in.write.get(), POLLOUT, 0};
            in_slot = count++;
        }
        if (out.read) {
            fds[count] = {out.read.get(), POLLIN, 0};
            out_slot = count++;
        }
        if (err.read) {
            fds[count] = {err.read.get(), POLLIN, 0};
            err_slot = count++;
        }
        int ready = ::poll(fds, static_cast<nfds_t>(count), timeout_ms);
        if (ready < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (in_slot >= 0 && fds[in_slot].revents != 0) {
            if (fds[in_slot].revents & (POLLERR | POLLHUP)) {
                in.write.reset();
            } else {
                ssize_t n = ::write(in.write.get(), payload.data() + written, payload.size() - written);
                if (n > 0) written += static_cast<std::size_t>(n);
                if ((n < 0 && errno != EAGAIN && errno != EINTR) || written == payload.size()) in.write.reset();
            }
        }
        auto drain = [&](int slot, Fd& fd, std::string& sink) {
            if (slot < 0 || fds[slot].revents == 0) return;
            while (true) {
                ssize_t n = ::read(fd.get(), buffer, sizeof buffer);
                if (n > 0) {
                    sink.append(buffer, static_cast<std::size_t>(n));
                    if (sink.size() > (64u << 20)) {
                        fd.reset();
                        return;
                    }
                    continue;
                }
                if (n == 0 || (errno != EAGAIN && errno != EINTR)) fd.reset();
                return;
            }
        };
        drain(out_slot, out.read, stdout_text);
        drain(err_slot, err.read, stderr_text);
    }

    // Output closed: give the process until the deadline to exit.
    while (!timed_out && !reaped) {
        pid_t done = ::waitpid(pid, &wait_status, WNOHANG);
        if (done == pid) {
            reaped = true;
            break;
        }
        if (Clock::now() >= deadline) {
            timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    // Always sweep the process group so no descendant outlives the call.
    kill_and_reap(pid, reaped, wait_status);

    ExecutionResult result;
    result.wall_time = Clock::now() - start;
    if (timed_out) {
        result.status = ExecStatus::timed_out;
        result.error_message = "execution exceeded the time limit of " + seconds_text(t);
        return result;
    }
    if (WIFEXITED(wait_status) && WEXITSTATUS(wait_status) == 127 && stdout_text.empty())
        throw ConfigurationError("external runtime failed to launch: " + clip(stderr_text));

    const std::string line = last_nonempty_line(stdout_text);
    nlohmann::json response;
    try {
        response = nlohmann::json::parse(line);
        if (!response.is_object() || !response.contains("status") || !response["status"].is_string())
            throw std::invalid_argument("missing status");
    } catch (const std::exception&) {
        result.status = ExecStatus::execution_error;
        result.error_message = "malformed runtime response";
        if (WIFSIGNALED(wait_status)) result.error_message += " (killed by signal " + std::to_string(WTERMSIG(wait_status)) + ")";
        result.error_message += "; raw output: " + clip(stdout_text);
        if (!stderr_text.empty()) result.error_message += "; stderr: " + clip(stderr_text);
        return result;
    }
    const auto status = response["status"].get<std::string>();
    if (status == "ok") {
        result.status = ExecStatus::ok;
        result.answer = response.value("answer", nlohmann::json());
    } else {
        result.status = ExecStatus::execution_error;
        const auto& error = response.contains("error") ? response["error"] : nlohmann::json();
        result.error_message = error.is_string() ? error.get<std::string>() : (error.is_null() ? status : error.dump());
    }
    return result;
}

namespace {

class TempGraphFile {
public:
    explicit TempGraphFile(const PropertyGraph& g) {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("grraf-graph-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                 std::to_string(rd()) + ".json");
        save_graph_file(g, path_, Dialect::canonical_json);
    }
    TempGraphFile(const TempGraphFile&) = delete;
    TempGraphFile& operator=(const TempGraphFile&) = delete;
    ~TempGraphFile() {
        std::error_code ec;
        std::filesystem::remove(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

ExecutionResult execute(const CodeArtifact& code, const PropertyGraph& g, std::chrono::nanoseconds t,
                        const ExecutorConfig& config, const std::optional<std::filesystem::path>& graph_path,
                        std::stop_token stop) {
    if (config.backend == Backend::embedded) return execute_embedded(code.source, g, t, std::move(stop));
    if (graph_path) return execute_external(code.source, *graph_path, t, config.runtime);
    TempGraphFile file(g);
    return execute_external(code.source, file.path(), t, config.runtime);
}

}  // namespace grraf

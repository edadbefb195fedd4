#pragma once

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include "r3dm/diffusion.hpp"
#include "r3dm/errors.hpp"

namespace r3dm {

// Wire protocol for out-of-process score models, over the child's
// stdin/stdout. All integers and floats are little-endian.
//   request:  u32 magic, u32 S, u32 N, u32 t, S*N*N f32 (real volume, row-major)
//   response: u32 magic, u32 status (0 = ok), S*N*N f32 score values
inline constexpr std::uint32_t k_score_protocol_magic = 0x52334D31;

static_assert(std::endian::native == std::endian::little,
              "score protocol serialization assumes a little-endian host");

// Runs a configured command as a persistent child process and exchanges one
// request per score() call. Requests are serialized (one in flight); any
// protocol violation kills the child and raises ExternalModelError.
class ExternalScoreModel final : public ScoreModel {
  public:
    explicit ExternalScoreModel(std::string command, int timeout_ms = 60000)
        : command_(std::move(command)), timeout_ms_(timeout_ms) {}

    ~ExternalScoreModel() override { shutdown(); }

    ExternalScoreModel(const ExternalScoreModel&) = delete;
    ExternalScoreModel& operator=(const ExternalScoreModel&) = delete;

    Volume score(const Volume& x_t, int t) override {
        if (pid_ < 0) spawn();

        const std::uint32_t S = static_cast<std::uint32_t>(x_t.slices());
        const std::uint32_t N = static_cast<std::uint32_t>(x_t.n());
        std::vector<char> request(16 + x_t.size() * 4);
        put_u32(request.data() + 0, k_score_protocol_magic);
        put_u32(request.data() + 4, S);
        put_u32(request.data() + 8, N);
        put_u32(request.data() + 12, static_cast<std::uint32_t>(t));
        float* payload = reinterpret_cast<float*>(request.data() + 16);
        for (std::size_t k = 0; k < x_t.size(); ++k) payload[k] = static_cast<float>(x_t[k].real());

        write_all(request.data(), request.size());

        char header[8];
        read_all(header, sizeof(header));
        const std::uint32_t magic = get_u32(header);
        const std::uint32_t status = get_u32(header + 4);
        if (magic != k_score_protocol_magic) fail("bad response magic from score process");
        if (status != 0) fail("score process reported status " + std::to_string(status));

        std::vector<float> scores(x_t.size());
        read_all(reinterpret_cast<char*>(scores.data()), scores.size() * 4);

        Volume out(S, N);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = cdouble(scores[k], 0.0);
        if (!out.is_finite()) fail("score process returned non-finite values");
        return out;
    }

    const char* name() const override { return "external"; }

  private:
    static void put_u32(char* dst, std::uint32_t v) { std::memcpy(dst, &v, 4); }
    static std::uint32_t get_u32(const char* src) {
        std::uint32_t v;
        std::memcpy(&v, src, 4);
        return v;
    }

    void spawn() {
        // a dying child must surface as EPIPE on write, not as SIGPIPE
        static std::once_flag sigpipe_once;
        std::call_once(sigpipe_once, [] { signal(SIGPIPE, SIG_IGN); });

        int to_child[2], from_child[2];
        if (pipe(to_child) != 0 || pipe(from_child) != 0)
            throw ExternalModelError("failed to create pipes for score process");
        const pid_t pid = fork();
        if (pid < 0) throw ExternalModelError("failed to fork score process");
        if (pid == 0) {
            dup2(to_child[0], STDIN_FILENO);
            dup2(from_child[1], STDOUT_FILENO);
            close(to_child[0]);
            close(to_child[1]);
            close(from_child[0]);
            close(from_child[1]);
            execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
            _exit(127);
        }
        close(to_child[0]);
        close(from_child[1]);
        pid_ = pid;
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    void shutdown() {
        if (write_fd_ >= 0) close(write_fd_);
        if (read_fd_ >= 0) close(read_fd_);
        write_fd_ = read_fd_ = -1;
        if (pid_ > 0) {
            kill(pid_, SIGTERM);
            int status = 0;
            waitpid(pid_, &status, 0);
            pid_ = -1;
        }
    }

    [[noreturn]] void fail(const std::string& msg) {
        shutdown();
        throw ExternalModelError("external score model (" + command_ + "): " + msg);
    }

    void write_all(const char* data, std::size_t count) {
        std::size_t off = 0;
        while (off < count) {
            const ssize_t n = write(write_fd_, data + off, count - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail("write to score process failed");
            }
            off += static_cast<std::size_t>(n);
        }
    }

    void read_all(char* data, std::size_t count) {
        std::size_t off = 0;
        while (off < count) {
            pollfd pfd{read_fd_, POLLIN, 0};
            const int ready = poll(&pfd, 1, timeout_ms_);
            if (ready < 0) {
                if (errno == EINTR) continue;
                fail("poll on score process failed");
            }
            if (ready == 0) fail("timed out waiting for score process response");
            const ssize_t n = read(read_fd_, data + off, count - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                fail("read from score process failed");
            }
            if (n == 0) fail("score process closed the stream mid-response");
            off += static_cast<std::size_t>(n);
        }
    }

    std::string command_;
    int timeout_ms_;
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
};

}  // namespace r3dm

#include "flowerpose/exchange.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "flowerpose/error.hpp"
#include "flowerpose/log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flowerpose {
namespace {

// One in-flight request per exchange directory: a mutex for threads of this
// process plus an advisory lock file for other processes.
class DirectoryLock {
public:
    explicit DirectoryLock(const fs::path& dir) : guard_(mutex_for(dir))
    {
        const auto lock_path = (dir / ".lock").string();
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0)
            throw DetectionError("exchange: cannot open lock file " + lock_path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw DetectionError("exchange: cannot lock " + lock_path);
        }
    }
    ~DirectoryLock()
    {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
    static std::mutex& mutex_for(const fs::path& dir)
    {
        static std::mutex table_mutex;
        static std::map<std::string, std::mutex> table;
        std::lock_guard lock(table_mutex);
        return table[fs::weakly_canonical(dir).string()];
    }

    std::lock_guard<std::mutex> guard_;
    int fd_ = -1;
};

std::string next_request_id()
{
    static std::atomic<unsigned> counter{0};
    std::ostringstream os;
    os << "fp-" << ::getpid() << '-' << counter.fetch_add(1);
    return os.str();
}

int pixel_of(const json& v, const char* key)
{
    if (!v.contains(key) || !v[key].is_number())
        throw DetectionError(std::string("exchange: box field '") + key + "' missing or not a number");
    const double d = v[key].get<double>();
    if (!std::isfinite(d))
        throw DetectionError(std::string("exchange: box field '") + key + "' is not finite");
    return static_cast<int>(std::floor(d));
}

} // namespace

json request_to_json(const ExchangeRequest& r)
{
    return json{{"id", r.id}, {"image", r.image.string()}, {"width", r.width}, {"height", r.height}};
}

ExchangeRequest request_from_json(const json& j)
{
    try {
        return {j.at("id").get<std::string>(), j.at("image").get<std::string>(), j.at("width").get<int>(),
                j.at("height").get<int>()};
    } catch (const json::exception& e) {
        throw DetectionError(std::string("exchange: malformed request: ") + e.what());
    }
}

std::vector<BBox2D> parse_response(const json& response, int width, int height)
{
    if (!response.is_object())
        throw DetectionError("exchange: response is not a JSON object");
    if (response.contains("error") && !response["error"].is_null()) {
        const auto msg = response["error"].is_string() ? response["error"].get<std::string>() : response["error"].dump();
        if (!msg.empty())
            throw DetectionError("exchange: adapter reported error: " + msg);
    }
    if (!response.contains("boxes") || !response["boxes"].is_array())
        throw DetectionError("exchange: response has no 'boxes' array");

    std::vector<BBox2D> out;
    for (const auto& v : response["boxes"]) {
        if (!v.is_object())
            throw DetectionError("exchange: box entry is not an object");
        BBox2D b{pixel_of(v, "x_min"), pixel_of(v, "x_max"), pixel_of(v, "y_min"), pixel_of(v, "y_max"), 1.0};
        if (!v.contains("score") || !v["score"].is_number())
            throw DetectionError("exchange: box field 'score' missing or not a number");
        b.score = v["score"].get<double>();
        if (!(b.score >= 0.0 && b.score <= 1.0))
            throw DetectionError("exchange: score outside [0,1]");
        if (b.x_min > b.x_max || b.y_min > b.y_max)
            throw DetectionError("exchange: inverted box");

        if (b.x_max < 0 || b.y_max < 0 || b.x_min >= width || b.y_min >= height) {
            log::warn("exchange: dropping box entirely outside the " + std::to_string(width) + "x" +
                      std::to_string(height) + " raster");
            continue;
        }
        const BBox2D clipped{std::max(b.x_min, 0), std::min(b.x_max, width - 1), std::max(b.y_min, 0),
                             std::min(b.y_max, height - 1), b.score};
        if (!(clipped == b))
            log::warn("exchange: clipped box to raster bounds");
        out.push_back(clipped);
    }
    return out;
}

json boxes_to_json(const std::vector<BBox2D>& boxes)
{
    json arr = json::array();
    for (const auto& b : boxes)
        arr.push_back({{"x_min", b.x_min}, {"y_min", b.y_min}, {"x_max", b.x_max}, {"y_max", b.y_max},
                       {"score", b.score}});
    return arr;
}

void write_file_atomic(const fs::path& path, const std::string& text)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out << text;
        if (!out)
            throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<BBox2D> external_detect(const RgbImage& image, const fs::path& exchange_dir,
                                    std::chrono::milliseconds timeout)
{
    if (!fs::is_directory(exchange_dir))
        throw DetectionError("exchange: directory does not exist: " + exchange_dir.string());

    const DirectoryLock lock(exchange_dir);
    const std::string id = next_request_id();
    const fs::path png = fs::absolute(exchange_dir / (id + ".png"));
    const fs::path req = exchange_dir / (id + ".req.json");
    const fs::path resp = exchange_dir / (id + ".resp.json");

    // the PNG must be complete before the request record appears
    const fs::path png_tmp = exchange_dir / (id + ".tmp.png");
    write_png(png_tmp, image);
    fs::rename(png_tmp, png);
    write_file_atomic(req, request_to_json({id, png, image.width(), image.height()}).dump());

    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (!fs::exists(resp)) {
        if (std::chrono::steady_clock::now() >= deadline) {
            std::error_code ec;
            fs::remove(req, ec);
            fs::remove(png, ec);
            throw DetectionError("exchange: timed out waiting for " + resp.string());
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    json response;
    {
        std::ifstream in(resp);
        try {
            in >> response;
        } catch (const json::exception& e) {
            throw DetectionError("exchange: malformed response " + resp.string() + ": " + e.what());
        }
    }
    std::error_code ec;
    fs::remove(req, ec);
    fs::remove(png, ec);
    fs::remove(resp, ec);
    return parse_response(response, image.width(), image.height());
}

} // namespace flowerpose

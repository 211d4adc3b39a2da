#include "flowerpose/log.hpp"

#include <iostream>
#include <mutex>

namespace flowerpose::log {
namespace {

std::mutex& sink_mutex()
{
    static std::mutex m;
    return m;
}

void stderr_sink(Level level, std::string_view message)
{
    if (level < Level::warn)
        return;
    std::cerr << (level == Level::warn ? "warning: " : "error: ") << message << '\n';
}

Sink& current()
{
    static Sink s = stderr_sink;
    return s;
}

} // namespace

Sink set_sink(Sink sink)
{
    std::lock_guard lock(sink_mutex());
    Sink previous = std::move(current());
    current() = sink ? std::move(sink) : Sink(stderr_sink);
    return previous;
}

void write(Level level, std::string_view message)
{
    std::lock_guard lock(sink_mutex());
    current()(level, message);
}

} // namespace flowerpose::log

#include <ecosim/rng.hpp>

namespace ecosim {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t a, std::uint64_t b)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : stream) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ h);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    return s;
}

} // namespace ecosim

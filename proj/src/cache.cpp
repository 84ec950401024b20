#include "mwchaos/cache.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace mwchaos {

namespace {

constexpr std::array<char, 8> magic = {'M', 'W', 'C', 'S', 'P', 'E', 'C', '\0'};

template <typename T>
void put(std::ostream& out, T value)
{
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = std::bit_cast<U>(value);
    char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(buf, sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value)
{
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    value = std::bit_cast<T>(bits);
    return true;
}

void put_doubles(std::ostream& out, const double* p, std::size_t n)
{
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) put(out, p[i]);
    }
}

bool get_doubles(std::istream& in, double* p, std::size_t n)
{
    if constexpr (std::endian::native == std::endian::little) {
        return static_cast<bool>(in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double))));
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (!get(in, p[i])) return false;
        return true;
    }
}

std::string hex_bits(double v)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    return buf;
}

} // namespace

SpectrumCache::SpectrumCache(std::filesystem::path dir) : dir_(std::move(dir))
{
    if (dir_.empty()) throw Error("spectrum cache needs a directory");
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (!std::filesystem::is_directory(dir_)) throw Error("cannot create cache directory " + dir_.string());
}

std::filesystem::path SpectrumCache::path_for(const HamiltonianParams& p, long e_cut, CouplingScheme scheme,
                                              bool vectors) const
{
    std::ostringstream name;
    name << "spec_N" << p.particles << "_W" << p.wells << "_t" << hex_bits(p.tau) << "_g" << hex_bits(p.gamma) << "_E"
         << e_cut << "_" << to_string(scheme) << (vectors ? "_vec" : "_val") << ".bin";
    return dir_ / name.str();
}

std::optional<SpectralResult> SpectrumCache::load(const HamiltonianParams& params, long e_cut, CouplingScheme scheme,
                                                  bool need_vectors) const
{
    std::ifstream in(path_for(params, e_cut, scheme, need_vectors), std::ios::binary);
    if (!in) return std::nullopt;
    std::array<char, 8> m{};
    if (!in.read(m.data(), m.size()) || m != magic) return std::nullopt;
    std::uint32_t version = 0, flags = 0;
    std::int32_t n = 0, w = 0, sch = 0;
    double tau = 0.0, gamma = 0.0;
    std::int64_t cut = 0, d = 0;
    if (!get(in, version) || !get(in, flags) || !get(in, n) || !get(in, w) || !get(in, tau) || !get(in, gamma) ||
        !get(in, cut) || !get(in, sch) || !get(in, d))
        return std::nullopt;
    if (version != format_version) return std::nullopt;
    // Exact bit equality of the key, not numeric closeness.
    if (n != params.particles || w != params.wells || std::bit_cast<std::uint64_t>(tau) != std::bit_cast<std::uint64_t>(params.tau) ||
        std::bit_cast<std::uint64_t>(gamma) != std::bit_cast<std::uint64_t>(params.gamma) || cut != e_cut ||
        sch != static_cast<std::int32_t>(scheme) || d < 0)
        return std::nullopt;
    const bool has_vectors = (flags & 1u) != 0;
    if (need_vectors != has_vectors) return std::nullopt;

    SpectralResult r;
    r.params = params;
    r.energy_cutoff = e_cut;
    r.scheme = scheme;
    const auto dim = static_cast<Eigen::Index>(d);
    r.eigenvalues.resize(dim);
    r.basis_energies.resize(dim);
    if (!get_doubles(in, r.eigenvalues.data(), static_cast<std::size_t>(d))) return std::nullopt;
    if (!get_doubles(in, r.basis_energies.data(), static_cast<std::size_t>(d))) return std::nullopt;
    if (has_vectors) {
        // Windowed solves carry their column range; older files hold all columns.
        std::int64_t offset = 0, cols = d;
        if ((flags & 2u) != 0 && (!get(in, offset) || !get(in, cols))) return std::nullopt;
        if (offset < 0 || cols < 1 || offset + cols > d) return std::nullopt;
        r.vector_offset = static_cast<Eigen::Index>(offset);
        r.eigenvectors.resize(dim, static_cast<Eigen::Index>(cols));
        if (!get_doubles(in, r.eigenvectors.data(), static_cast<std::size_t>(d * cols))) return std::nullopt;
    }
    return r;
}

void SpectrumCache::store(const SpectralResult& r) const
{
    const auto final_path = path_for(r.params, r.energy_cutoff, r.scheme, r.has_vectors());
    std::ostringstream tmp_name;
    tmp_name << final_path.filename().string() << ".tmp." << ::getpid() << "."
             << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const auto tmp = dir_ / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write cache file " + tmp.string());
        out.write(magic.data(), magic.size());
        put(out, format_version);
        const bool windowed = r.has_vectors() && r.eigenvectors.cols() != r.dim();
        put(out, static_cast<std::uint32_t>((r.has_vectors() ? 1u : 0u) | (windowed ? 2u : 0u)));
        put(out, static_cast<std::int32_t>(r.params.particles));
        put(out, static_cast<std::int32_t>(r.params.wells));
        put(out, r.params.tau);
        put(out, r.params.gamma);
        put(out, static_cast<std::int64_t>(r.energy_cutoff));
        put(out, static_cast<std::int32_t>(r.scheme));
        put(out, static_cast<std::int64_t>(r.dim()));
        put_doubles(out, r.eigenvalues.data(), static_cast<std::size_t>(r.dim()));
        put_doubles(out, r.basis_energies.data(), static_cast<std::size_t>(r.basis_energies.size()));
        if (windowed) {
            put(out, static_cast<std::int64_t>(r.vector_offset));
            put(out, static_cast<std::int64_t>(r.eigenvectors.cols()));
        }
        if (r.has_vectors()) put_doubles(out, r.eigenvectors.data(), static_cast<std::size_t>(r.eigenvectors.size()));
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw Error("failed writing cache file " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, final_path);
}

std::filesystem::path cache_dir_from_env()
{
    const char* v = std::getenv("MWCHAOS_CACHE_DIR");
    return (v && *v) ? std::filesystem::path(v) : std::filesystem::path{};
}

SpectralResult solve_cached(const SpectrumCache* cache, const HamiltonianParams& params, long energy_cutoff,
                            CouplingScheme scheme, bool with_vectors, bool* hit)
{
    if (hit) *hit = false;
    if (cache) {
        if (auto r = cache->load(params, energy_cutoff, scheme, with_vectors)) {
            if (hit) *hit = true;
            return std::move(*r);
        }
    }
    SpectralResult r = solve_sector(params, energy_cutoff, scheme, with_vectors);
    if (cache) cache->store(r);
    return r;
}

SpectralResult solve_cached(const SpectrumCache* cache, const HamiltonianParams& params, long energy_cutoff,
                            CouplingScheme scheme, EnergyRange vectors, bool* hit)
{
    if (hit) *hit = false;
    if (cache) {
        if (auto r = cache->load(params, energy_cutoff, scheme, true)) {
            const double* v = r->eigenvalues.data();
            const auto first = std::lower_bound(v, v + r->dim(), vectors.min) - v;
            const auto last = std::upper_bound(v, v + r->dim(), vectors.max) - v;
            if (r->vectors_cover(first, last - first)) {
                if (hit) *hit = true;
                return std::move(*r);
            }
        }
    }
    SpectralResult r = solve_sector(params, energy_cutoff, scheme, vectors);
    if (cache) cache->store(r);
    return r;
}

} // namespace mwchaos

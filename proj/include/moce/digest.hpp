#pragma once

// SHA-256 digests for run manifests (OpenSSL libcrypto).

#include "moce/core.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <string>
#include <string_view>

namespace moce {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new())
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t len)
    {
        if (EVP_DigestUpdate(ctx_, data, len) != 1) throw Error("sha256: update failed");
    }

    std::string hex()
    {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned len = 0;
        if (EVP_DigestFinal_ex(ctx_, md.data(), &len) != 1) throw Error("sha256: final failed");
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned i = 0; i < len; ++i) {
            out += digits[md[i] >> 4];
            out += digits[md[i] & 15];
        }
        return out;
    }

private:
    EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::string_view s)
{
    Sha256 h;
    h.update(s.data(), s.size());
    return h.hex();
}

inline std::string sha256_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open '" + path + "'");
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (f) {
        f.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(f.gcount()));
    }
    return h.hex();
}

} // namespace moce

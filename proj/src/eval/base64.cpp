#include "alcgan/eval/base64.hpp"

#include <openssl/evp.h>

#include "alcgan/error.hpp"

namespace alcgan::eval {

std::string base64_encode(const data::Bytes& bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

data::Bytes base64_decode(std::string_view text, const std::string& field) {
    if (text.size() % 4 != 0) throw ValidationError(field, "base64 length must be a multiple of 4");
    data::Bytes out(text.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw ValidationError(field, "invalid base64");
    // EVP_DecodeBlock keeps the bytes that stand in for '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

} // namespace alcgan::eval

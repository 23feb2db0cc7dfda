#include "objauth/core.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fstream>

namespace objauth {

namespace {

constexpr std::size_t kFileChunkBytes = 64 * 1024;
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
    }
    return -1;
}

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};

// Decodes one UTF-8 sequence starting at `i`; returns its length or 0 if
// malformed (overlong forms, surrogates and values past U+10FFFF included).
std::size_t utf8_sequence_length(std::string_view s, std::size_t i, char32_t& cp) noexcept {
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (lead < 0x80) {
        cp = lead;
        return 1;
    }
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) {
        return 0;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const auto cont = static_cast<unsigned char>(s[i + k]);
        if ((cont & 0xC0) != 0x80) {
            return 0;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        return 0;
    }
    return len;
}

} // namespace

std::string hex_encode(ByteView bytes) {
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const auto b : bytes) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0F]);
    }
    return out;
}

std::vector<std::uint8_t> hex_decode(std::string_view text) {
    if (text.size() % 2 != 0) {
        throw DecodeError("hex text has odd length " + std::to_string(text.size()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        const int hi = hex_value(text[i]);
        const int lo = hex_value(text[i + 1]);
        if (hi < 0 || lo < 0) {
            throw DecodeError("non-hex character at offset " + std::to_string(hi < 0 ? i : i + 1));
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

bool constant_time_equal(ByteView a, ByteView b) noexcept {
    if (a.size() != b.size()) {
        return false;
    }
    volatile std::uint8_t diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff |= static_cast<std::uint8_t>(a[i] ^ b[i]);
    }
    return diff == 0;
}

PasswordString::PasswordString(std::string value) : value_(std::move(value)) {
    if (value_.empty()) {
        throw InvalidInput("password string must not be empty");
    }
}

PasswordString PasswordString::from_digest(const Digest& digest) {
    return PasswordString(digest_to_hex(digest));
}

PasswordString PasswordString::from_transmitted(std::string value) {
    if (value.size() == 2 * kDigestSize &&
        std::all_of(value.begin(), value.end(), [](char c) { return hex_value(c) >= 0; })) {
        std::transform(value.begin(), value.end(), value.begin(),
                       [](char c) { return c >= 'A' && c <= 'F' ? static_cast<char>(c - 'A' + 'a') : c; });
    }
    return PasswordString(std::move(value));
}

ByteView PasswordString::bytes() const noexcept {
    return {reinterpret_cast<const std::uint8_t*>(value_.data()), value_.size()};
}

struct DigestStream::Impl {
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx{EVP_MD_CTX_new()};
};

DigestStream::DigestStream() : impl_(std::make_unique<Impl>()) {
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 context initialisation failed");
    }
}

DigestStream::~DigestStream() = default;
DigestStream::DigestStream(DigestStream&&) noexcept = default;
DigestStream& DigestStream::operator=(DigestStream&&) noexcept = default;

void DigestStream::update(ByteView chunk) {
    if (chunk.empty()) {
        return;
    }
    if (EVP_DigestUpdate(impl_->ctx.get(), chunk.data(), chunk.size()) != 1) {
        throw Error("SHA-256 update failed");
    }
}

void DigestStream::update(std::string_view chunk) {
    update(ByteView(reinterpret_cast<const std::uint8_t*>(chunk.data()), chunk.size()));
}

Digest DigestStream::finish() {
    std::array<std::uint8_t, kDigestSize> out{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(impl_->ctx.get(), out.data(), &len) != 1 || len != kDigestSize) {
        throw Error("SHA-256 finalisation failed");
    }
    return Digest(out);
}

Digest object_digest(ByteView object) {
    DigestStream stream;
    stream.update(object);
    return stream.finish();
}

Digest object_digest(std::string_view object) {
    DigestStream stream;
    stream.update(object);
    return stream.finish();
}

Digest digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    DigestStream stream;
    std::vector<char> buffer(kFileChunkBytes);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const auto got = static_cast<std::size_t>(in.gcount());
        stream.update(std::string_view(buffer.data(), got));
    }
    if (in.bad()) {
        throw IoError("read failed on " + path.string());
    }
    return stream.finish();
}

Salt generate_salt() {
    std::array<std::uint8_t, kSaltSize> bytes{};
    if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) {
        throw RandomnessError("CSPRNG failed to produce salt bytes");
    }
    return Salt(bytes);
}

Digest derive_stored_hash(const PasswordString& password, const Salt& salt) {
    DigestStream stream;
    stream.update(password.bytes());
    stream.update(salt.bytes());
    return stream.finish();
}

bool verify_credentials(const PasswordString& password, const AccountRecord& record) noexcept {
    try {
        const Digest derived = derive_stored_hash(password, record.salt);
        return constant_time_equal(derived.bytes(), record.pwd_hash.bytes());
    } catch (...) {
        return false;
    }
}

std::string digest_to_hex(const Digest& digest) {
    return digest.hex();
}

Digest hex_to_digest(std::string_view text) {
    return Digest::from_hex(text);
}

void validate_user_id(std::string_view user_id) {
    if (user_id.empty()) {
        throw InvalidInput("user id must not be empty");
    }
    if (user_id.size() > kMaxUserIdBytes) {
        throw InvalidInput("user id longer than " + std::to_string(kMaxUserIdBytes) + " bytes");
    }
    for (std::size_t i = 0; i < user_id.size();) {
        char32_t cp = 0;
        const std::size_t len = utf8_sequence_length(user_id, i, cp);
        if (len == 0) {
            throw InvalidInput("user id is not valid UTF-8");
        }
        if (cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp < 0xA0)) {
            throw InvalidInput("user id contains a control character");
        }
        i += len;
    }
}

AccountRecord make_account(std::string user_id, const PasswordString& password) {
    validate_user_id(user_id);
    AccountRecord record;
    record.user_id = std::move(user_id);
    record.salt = generate_salt();
    record.pwd_hash = derive_stored_hash(password, record.salt);
    return record;
}

} // namespace objauth

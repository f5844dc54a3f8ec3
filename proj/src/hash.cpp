#include "gjepa/hash.hpp"

#include <fstream>
#include <iterator>

#include <openssl/sha.h>

#include "gjepa/error.hpp"

namespace gjepa {

std::string sha1_hex(std::string_view bytes) {
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), digest);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

std::string git_blob_hash(std::string_view bytes) {
  std::string buf = "blob " + std::to_string(bytes.size());
  buf.push_back('\0');
  buf.append(bytes);
  return sha1_hex(buf);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string git_blob_hash_file(const std::filesystem::path& path) {
  return git_blob_hash(read_file_bytes(path));
}

}  // namespace gjepa

#pragma once

#include <stdexcept>
#include <string>

namespace irisx {

/// Base class for every error this library throws.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidImage : public Error {
public:
    explicit InvalidImage(const std::string& what) : Error(what) {}
};

class InvalidGeometry : public Error {
public:
    explicit InvalidGeometry(const std::string& what) : Error(what) {}
};

class EmptyMask : public Error {
public:
    explicit EmptyMask(const std::string& what) : Error(what) {}
};

class InvalidMarker : public Error {
public:
    explicit InvalidMarker(const std::string& what) : Error(what) {}
};

class IncompatibleTemplates : public Error {
public:
    explicit IncompatibleTemplates(const std::string& what) : Error(what) {}
};

class NotATemplate : public Error {
public:
    explicit NotATemplate(const std::string& what) : Error(what) {}
};

class UnsupportedVersion : public Error {
public:
    explicit UnsupportedVersion(const std::string& what) : Error(what) {}
};

class Corrupt : public Error {
public:
    explicit Corrupt(const std::string& what) : Error(what) {}
};

class BadFilterFile : public Error {
public:
    explicit BadFilterFile(const std::string& what) : Error(what) {}
};

class KernelTooLarge : public Error {
public:
    explicit KernelTooLarge(const std::string& what) : Error(what) {}
};

class DegenerateEmbedding : public Error {
public:
    explicit DegenerateEmbedding(const std::string& what) : Error(what) {}
};

class EmptyGallery : public Error {
public:
    explicit EmptyGallery(const std::string& what) : Error(what) {}
};

class NoComparablePair : public Error {
public:
    explicit NoComparablePair(const std::string& what) : Error(what) {}
};

class InsufficientScores : public Error {
public:
    explicit InsufficientScores(const std::string& what) : Error(what) {}
};

class NoCommonPairs : public Error {
public:
    explicit NoCommonPairs(const std::string& what) : Error(what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace irisx

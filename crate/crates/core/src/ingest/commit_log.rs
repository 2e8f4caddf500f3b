//! Parser for the output of
//! `git log --numstat --date=unix --no-renames --pretty=format:"@@@%H|%ae|%ad|%P"`.
//!
//! Grammar, one item per line:
//!
//! ```text
//! log     := record (blank* record)* blank*
//! record  := header numstat*
//! header  := "@@@" HASH "|" EMAIL "|" UNIX_SECONDS "|" (HASH (" " HASH)*)?
//! numstat := (COUNT "\t" COUNT | "-\t-") "\t" PATH
//! ```
//!
//! A numstat line must directly follow its header or another numstat line.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{is_full_hash, validate_path, CommitRecord, FileChange, IngestError};

const SENTINEL: &str = "@@@";

/// Parses raw log bytes into commits ordered oldest-first.
///
/// Ties on timestamp keep input order. Merge commits are retained.
pub fn parse_commit_log(text: &[u8]) -> Result<Vec<CommitRecord>, IngestError> {
    if text.iter().all(u8::is_ascii_whitespace) {
        return Err(IngestError::EmptyInput);
    }

    let mut commits: Vec<CommitRecord> = Vec::new();
    // Whether the previous line may be followed by a numstat line.
    let mut in_record = false;

    for (idx, raw) in text.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line = std::str::from_utf8(raw).map_err(|_| malformed(line_no, "line is not valid UTF-8"))?;

        if line.is_empty() {
            in_record = false;
            continue;
        }
        if let Some(header) = line.strip_prefix(SENTINEL) {
            commits.push(parse_header(header, line_no)?);
            in_record = true;
            continue;
        }
        if !in_record {
            return Err(malformed(line_no, "numstat line outside of a commit record"));
        }
        let change = parse_numstat(line, line_no)?;
        commits
            .last_mut()
            .expect("in_record implies a header was pushed")
            .changes
            .push(change);
    }

    // Stable sort keeps input order for equal timestamps.
    commits.sort_by_key(|c| c.timestamp);
    Ok(commits)
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedRecord {
        line,
        reason: reason.into(),
    }
}

fn parse_header(header: &str, line: usize) -> Result<CommitRecord, IngestError> {
    // The email sits between the first and the second-to-last separator so
    // that an email containing '|' still parses.
    let (hash, rest) = header
        .split_once('|')
        .ok_or_else(|| malformed(line, "header has no '|' separators"))?;
    let (rest, parents) = rest
        .rsplit_once('|')
        .ok_or_else(|| malformed(line, "header is missing the parents field"))?;
    let (email, date) = rest
        .rsplit_once('|')
        .ok_or_else(|| malformed(line, "header is missing the date field"))?;

    if !is_full_hash(hash) {
        return Err(malformed(line, format!("commit hash {hash:?} is not 40 lowercase hex characters")));
    }
    let timestamp: i64 = date
        .parse()
        .map_err(|_| malformed(line, format!("date {date:?} is not unix seconds")))?;
    if timestamp <= 0 {
        return Err(malformed(line, format!("timestamp {timestamp} is not positive")));
    }
    let mut parent_count = 0u32;
    for parent in parents.split_whitespace() {
        if !is_full_hash(parent) {
            return Err(malformed(line, format!("parent hash {parent:?} is not 40 lowercase hex characters")));
        }
        parent_count += 1;
    }

    Ok(CommitRecord {
        hash: hash.to_owned(),
        author: email.to_lowercase(),
        timestamp,
        parent_count,
        changes: Vec::new(),
    })
}

fn parse_numstat(line: &str, line_no: usize) -> Result<FileChange, IngestError> {
    let mut fields = line.splitn(3, '\t');
    let added = fields.next().unwrap_or_default();
    let deleted = fields
        .next()
        .ok_or_else(|| malformed(line_no, "numstat line has fewer than three tab-separated fields"))?;
    let raw_path = fields
        .next()
        .ok_or_else(|| malformed(line_no, "numstat line has fewer than three tab-separated fields"))?;

    let path = unquote_path(raw_path).ok_or_else(|| malformed(line_no, format!("bad quoted path {raw_path:?}")))?;
    validate_path(&path).map_err(|reason| malformed(line_no, reason))?;

    match (added, deleted) {
        ("-", "-") => Ok(FileChange::binary(path)),
        _ => {
            let added = parse_count(added).ok_or_else(|| malformed(line_no, format!("bad added count {added:?}")))?;
            let deleted =
                parse_count(deleted).ok_or_else(|| malformed(line_no, format!("bad deleted count {deleted:?}")))?;
            Ok(FileChange::text(path, added, deleted))
        }
    }
}

fn parse_count(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Undoes git's C-style quoting of unusual paths (`core.quotePath`).
fn unquote_path(raw: &str) -> Option<String> {
    let Some(inner) = raw.strip_prefix('"') else {
        return Some(raw.to_owned());
    };
    let inner = inner.strip_suffix('"')?;
    let mut out: Vec<u8> = Vec::with_capacity(inner.len());
    let mut bytes = inner.bytes();
    while let Some(b) = bytes.next() {
        if b != b'\\' {
            out.push(b);
            continue;
        }
        let esc = bytes.next()?;
        let decoded = match esc {
            b'a' => 0x07,
            b'b' => 0x08,
            b't' => b'\t',
            b'n' => b'\n',
            b'v' => 0x0b,
            b'f' => 0x0c,
            b'r' => b'\r',
            b'"' => b'"',
            b'\\' => b'\\',
            b'0'..=b'3' => {
                let hi = esc - b'0';
                let mid = bytes.next().filter(|d| (b'0'..=b'7').contains(d))? - b'0';
                let lo = bytes.next().filter(|d| (b'0'..=b'7').contains(d))? - b'0';
                (hi << 6) | (mid << 3) | lo
            }
            _ => return None,
        };
        out.push(decoded);
    }
    String::from_utf8(out).ok()
}

/// Writes commits in the internal JSON Lines form, one commit per line.
pub fn write_commits_jsonl<W: Write>(commits: &[CommitRecord], mut out: W) -> std::io::Result<()> {
    for c in commits {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads commits from the internal JSON Lines form, validating every record.
pub fn read_commits_jsonl<R: BufRead>(input: R) -> Result<Vec<CommitRecord>, IngestError> {
    let mut commits = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::SchemaViolation {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let commit: CommitRecord = serde_json::from_str(&line).map_err(|e| IngestError::SchemaViolation {
            line: line_no,
            reason: e.to_string(),
        })?;
        commit.validate().map_err(|reason| IngestError::SchemaViolation { line: line_no, reason })?;
        commits.push(commit);
    }
    Ok(commits)
}

pub fn load_commits_jsonl(path: impl AsRef<Path>) -> Result<Vec<CommitRecord>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_commits_jsonl(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sha(c: char) -> String {
        std::iter::repeat(c).take(40).collect()
    }

    #[test]
    fn hand_traced_record() {
        let log = format!("@@@{}|Bob@X.com|1600000000|\n5\t2\tsrc/a.py", sha('a'));
        let commits = parse_commit_log(log.as_bytes()).unwrap();
        assert_eq!(
            commits,
            vec![CommitRecord {
                hash: sha('a'),
                author: "bob@x.com".into(),
                timestamp: 1_600_000_000,
                parent_count: 0,
                changes: vec![FileChange::text("src/a.py", 5, 2)],
            }]
        );
    }

    #[test]
    fn binary_numstat_is_unknown() {
        let log = format!("@@@{}|a@b|10|\n-\t-\timg.png\n", sha('b'));
        let commits = parse_commit_log(log.as_bytes()).unwrap();
        assert_eq!(commits[0].changes, vec![FileChange::binary("img.png")]);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_commit_log(b""), Err(IngestError::EmptyInput)));
        assert!(matches!(parse_commit_log(b"\n\n"), Err(IngestError::EmptyInput)));
    }

    #[test]
    fn real_git_output_with_merge() {
        // Captured from a throwaway repository; newest-first as git prints it.
        let log = format!(
            "@@@{m}|Bob@X.com|300|{a} {b}\n@@@{a}|Bob@X.com|200|{r}\n1\t0\tt\n\n@@@{b}|Eve@Y.org|250|{r}\n1\t0\ts\n\n@@@{r}|Bob@X.com|100|\n2\t0\ta.py\n-\t-\timg.png",
            m = sha('d'),
            a = sha('a'),
            b = sha('b'),
            r = sha('c'),
        );
        let commits = parse_commit_log(log.as_bytes()).unwrap();
        let stamps: Vec<_> = commits.iter().map(|c| c.timestamp).collect();
        assert_eq!(stamps, vec![100, 200, 250, 300]);
        assert!(commits[3].is_merge());
        assert_eq!(commits[3].parent_count, 2);
        assert!(commits[3].changes.is_empty());
        assert_eq!(commits[2].author, "eve@y.org");
    }

    #[test]
    fn ties_keep_input_order() {
        let log = format!("@@@{}|x@y|5|\n@@@{}|x@y|5|\n", sha('1'), sha('2'));
        let commits = parse_commit_log(log.as_bytes()).unwrap();
        assert_eq!(commits[0].hash, sha('1'));
        assert_eq!(commits[1].hash, sha('2'));
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            (format!("@@@{}|a@b|10|\n5\t2\n", sha('a')), 2),
            (format!("@@@{}|a@b|10|\nx\t2\tf\n", sha('a')), 2),
            (format!("@@@{}|a@b|10|\n-\t3\tf\n", sha('a')), 2),
            (format!("@@@{}|a@b|10|\n5\t2\t/abs\n", sha('a')), 2),
            (format!("@@@{}|a@b|10|\n5\t2\t\n", sha('a')), 2),
            ("5\t2\tf\n".to_string(), 1),
            (format!("@@@{}|a@b|10|\n\n5\t2\tf\n", sha('a')), 3),
            ("@@@abc|a@b|10|\n".to_string(), 1),
            (format!("@@@{}|a@b|0|\n", sha('a')), 1),
            (format!("@@@{}|a@b|ten|\n", sha('a')), 1),
            (format!("@@@{}|a@b\n", sha('a')), 1),
            (format!("@@@{}|a@b|10|deadbeef\n", sha('a')), 1),
            (format!("@@@{}|a@b|10|\n1\t1\tok\n@@@{}|a@b|10|\n", sha('a'), sha('A')), 3),
        ];
        for (log, want) in cases {
            match parse_commit_log(log.as_bytes()) {
                Err(IngestError::MalformedRecord { line, .. }) => assert_eq!(line, want, "{log:?}"),
                other => panic!("expected MalformedRecord for {log:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn email_with_pipe_and_quoted_path() {
        let log = format!("@@@{}|we|ird@X|7|\n1\t0\t\"dir/tab\\there\\303\\251.txt\"\n", sha('e'));
        let commits = parse_commit_log(log.as_bytes()).unwrap();
        assert_eq!(commits[0].author, "we|ird@x");
        assert_eq!(commits[0].changes[0].path, "dir/tab\there\u{e9}.txt");
    }

    fn arb_commit() -> impl Strategy<Value = CommitRecord> {
        let change = ("[a-z]{1,6}(/[a-z]{1,6}){0,2}", proptest::option::of((0u64..500, 0u64..500)))
            .prop_map(|(path, lines)| match lines {
                Some((a, d)) => FileChange::text(path, a, d),
                None => FileChange::binary(path),
            });
        (
            "[0-9a-f]{40}",
            "[a-z]{1,5}@[a-z]{1,5}\\.com",
            1i64..2_000_000_000,
            0u32..3,
            proptest::collection::vec(change, 0..4),
        )
            .prop_map(|(hash, author, timestamp, parent_count, changes)| CommitRecord {
                hash,
                author,
                timestamp,
                parent_count,
                changes,
            })
    }

    fn render(commits: &[CommitRecord]) -> String {
        let parent = sha('f');
        commits
            .iter()
            .map(|c| {
                let parents = vec![parent.as_str(); c.parent_count as usize].join(" ");
                let mut s = format!("@@@{}|{}|{}|{}", c.hash, c.author, c.timestamp, parents);
                for ch in &c.changes {
                    match ch.lines {
                        Some(d) => s.push_str(&format!("\n{}\t{}\t{}", d.added, d.deleted, ch.path)),
                        None => s.push_str(&format!("\n-\t-\t{}", ch.path)),
                    }
                }
                s
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    proptest! {
        #[test]
        fn rendered_logs_parse_back(mut commits in proptest::collection::vec(arb_commit(), 1..12)) {
            let parsed = parse_commit_log(render(&commits).as_bytes()).unwrap();
            commits.sort_by_key(|c| c.timestamp);
            prop_assert_eq!(&parsed, &commits);
            for c in &parsed {
                prop_assert!(c.validate().is_ok());
            }
        }

        #[test]
        fn jsonl_round_trip(commits in proptest::collection::vec(arb_commit(), 0..12)) {
            let mut buf = Vec::new();
            write_commits_jsonl(&commits, &mut buf).unwrap();
            let back = read_commits_jsonl(buf.as_slice()).unwrap();
            prop_assert_eq!(back, commits);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            if let Ok(commits) = parse_commit_log(&bytes) {
                for c in &commits {
                    prop_assert!(c.validate().is_ok());
                }
            }
        }
    }

    #[test]
    fn jsonl_rejects_half_binary_change() {
        let line = format!(
            r#"{{"hash":"{}","author":"a@b","timestamp":3,"parent_count":0,"changes":[{{"path":"f","added":1,"deleted":null}}]}}"#,
            sha('a')
        );
        assert!(matches!(
            read_commits_jsonl(line.as_bytes()),
            Err(IngestError::SchemaViolation { line: 1, .. })
        ));
    }
}

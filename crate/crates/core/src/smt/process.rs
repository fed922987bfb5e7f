use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use super::encode::{quote, script};
use super::response::parse_values;
use super::{Answer, Backend, BackendError, Model, Query};

/// How to start the external solver.
#[derive(Clone, Debug)]
pub struct BackendConfig {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    /// Transcript of every command and response.
    pub log: Option<PathBuf>,
}

pub const BACKEND_ENV: &str = "ARRAYACCEL_BACKEND";

fn on_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(name)).find(|p| p.is_file())
}

impl BackendConfig {
    /// `cmd` is a program followed by optional flags. Without flags the
    /// usual non-interactive flags for z3 or cvc5 are supplied.
    pub fn from_command(cmd: &str) -> Option<Self> {
        let mut words = cmd.split_whitespace().map(str::to_string);
        let program = words.next()?;
        let mut args: Vec<String> = words.collect();
        if args.is_empty() {
            let base = Path::new(&program).file_name().and_then(|s| s.to_str()).unwrap_or("");
            args = if base.contains("cvc5") {
                vec!["--lang=smt2".into(), "--incremental".into(), "--produce-models".into()]
            } else {
                vec!["-in".into(), "-smt2".into()]
            };
        }
        Some(BackendConfig { program, args, timeout: Duration::from_secs(10), log: None })
    }

    /// An explicit command, else the environment variable, else `z3` or
    /// `cvc5` from `PATH`.
    pub fn locate(explicit: Option<&str>) -> Option<Self> {
        if let Some(cmd) = explicit {
            return Self::from_command(cmd);
        }
        if let Ok(cmd) = std::env::var(BACKEND_ENV) {
            if !cmd.trim().is_empty() {
                return Self::from_command(&cmd);
            }
        }
        ["z3", "cvc5"]
            .iter()
            .find_map(|name| on_path(name))
            .and_then(|p| Self::from_command(&p.to_string_lossy()))
    }

    pub fn with_timeout(mut self, t: Duration) -> Self {
        self.timeout = t;
        self
    }

    pub fn with_log(mut self, path: Option<PathBuf>) -> Self {
        self.log = path;
        self
    }

    fn is_z3(&self) -> bool {
        Path::new(&self.program).file_name().and_then(|s| s.to_str()).is_some_and(|s| s.contains("z3"))
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A solver subprocess speaking SMT-LIB2 over stdin/stdout. Each query runs
/// inside `push`/`pop`; the process is restarted after a timeout or error.
pub struct SolverProcess {
    config: BackendConfig,
    running: Option<Running>,
    log: Option<File>,
}

impl SolverProcess {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        let log = match &config.log {
            Some(p) => Some(File::create(p).map_err(|e| BackendError::Unavailable(format!("{}: {e}", p.display())))?),
            None => None,
        };
        let mut s = SolverProcess { config, running: None, log };
        s.ensure_started()?;
        Ok(s)
    }

    pub fn locate(explicit: Option<&str>, timeout: Duration, log: Option<PathBuf>) -> Result<Self, BackendError> {
        let config = BackendConfig::locate(explicit)
            .ok_or_else(|| BackendError::Unavailable(format!("no solver found; set {BACKEND_ENV} or install z3")))?;
        Self::new(config.with_timeout(timeout).with_log(log))
    }

    fn note(&mut self, text: &str) {
        if let Some(f) = &mut self.log {
            let _ = writeln!(f, "{text}");
        }
    }

    fn spawn(&self) -> Result<Running, BackendError> {
        let mut child = Command::new(&self.config.program)
            .args(&self.config.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", self.config.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running { child, stdin, lines })
    }

    fn ensure_started(&mut self) -> Result<(), BackendError> {
        if self.running.is_some() {
            return Ok(());
        }
        self.running = Some(self.spawn()?);
        let mut setup = vec![
            "(set-option :print-success true)".to_string(),
            "(set-option :produce-models true)".to_string(),
            "(set-logic ALL)".to_string(),
        ];
        if self.config.is_z3() {
            setup.push(format!("(set-option :timeout {})", self.config.timeout.as_millis()));
        }
        let deadline = Instant::now() + Duration::from_secs(10);
        for cmd in &setup {
            self.send(cmd)?;
            let r = self.response(deadline)?;
            if r != "success" && r != "unsupported" {
                self.running = None;
                return Err(BackendError::Protocol(format!("{cmd}: {r}")));
            }
        }
        Ok(())
    }

    fn send(&mut self, cmd: &str) -> Result<(), BackendError> {
        self.note(cmd);
        let run = self.running.as_mut().expect("started");
        writeln!(run.stdin, "{cmd}")
            .and_then(|_| run.stdin.flush())
            .map_err(|e| BackendError::Protocol(format!("write failed: {e}")))
    }

    /// One complete response: a line, or several lines until parentheses balance.
    fn response(&mut self, deadline: Instant) -> Result<String, BackendError> {
        let mut text = String::new();
        let mut depth = 0i64;
        loop {
            let run = self.running.as_mut().expect("started");
            let wait = deadline.saturating_duration_since(Instant::now());
            match run.lines.recv_timeout(wait) {
                Ok(line) => {
                    depth += line.matches('(').count() as i64 - line.matches(')').count() as i64;
                    if !text.is_empty() {
                        text.push('\n');
                    }
                    text.push_str(line.trim());
                    if depth <= 0 && !text.is_empty() {
                        break;
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    self.running = None;
                    self.note("; <- (timeout, solver restarted)");
                    return Err(BackendError::Timeout(self.config.timeout));
                }
                Err(RecvTimeoutError::Disconnected) => {
                    self.running = None;
                    return Err(BackendError::Protocol("solver exited".into()));
                }
            }
        }
        self.note(&format!("; <- {text}"));
        if text.starts_with("(error") {
            self.running = None;
            return Err(BackendError::Protocol(text));
        }
        Ok(text)
    }

    fn expect_success(&mut self, deadline: Instant) -> Result<(), BackendError> {
        let r = self.response(deadline)?;
        if r == "success" {
            Ok(())
        } else {
            self.running = None;
            Err(BackendError::Protocol(format!("expected success, got {r}")))
        }
    }

    fn run(&mut self, q: &Query) -> Result<Answer, BackendError> {
        let commands = script(&q.assertions, &q.model_vars)?;
        self.ensure_started()?;
        let deadline = Instant::now() + self.config.timeout + Duration::from_secs(2);
        self.note("; ---- query");
        self.send("(push 1)")?;
        self.expect_success(deadline)?;
        for c in &commands {
            self.send(c)?;
        }
        for _ in &commands {
            self.expect_success(deadline)?;
        }
        self.send("(check-sat)")?;
        let verdict = self.response(deadline)?;
        let answer = match verdict.as_str() {
            "unsat" => Answer::Unsat,
            "sat" => {
                let mut model = Model::new();
                if !q.model_vars.is_empty() {
                    let names: Vec<String> = q.model_vars.iter().map(|v| quote(&v.name)).collect();
                    self.send(&format!("(get-value ({}))", names.join(" ")))?;
                    let text = self.response(deadline)?;
                    model.values = parse_values(&text, &q.model_vars)?;
                }
                Answer::Sat(model)
            }
            other => Answer::Unknown(format!("backend answered {other}")),
        };
        self.send("(pop 1)")?;
        self.expect_success(deadline)?;
        Ok(answer)
    }
}

impl Backend for SolverProcess {
    fn check(&mut self, q: &Query) -> Result<Answer, BackendError> {
        let r = self.run(q);
        if r.is_err() {
            // A half-finished exchange leaves the session in an unknown state.
            self.running = None;
        }
        r
    }

    fn name(&self) -> String {
        self.config.program.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Var;
    use crate::sexpr::Decls;

    fn solver() -> Option<SolverProcess> {
        SolverProcess::locate(None, Duration::from_secs(5), None).ok()
    }

    #[test]
    fn sat_and_unsat_round_trip() {
        let Some(mut s) = solver() else { return };
        let d = Decls::new().with(&Var::scalar("x")).with(&Var::array("a", 1));
        let f = d.parse_formula("(and (> x 3) (= (select a x) 7))").unwrap();
        let q = Query::new(vec![f]).with_model([Var::scalar("x"), Var::array("a", 1)]);
        let Answer::Sat(m) = s.check(&q).unwrap() else { panic!("expected sat") };
        let x = m.int("x").unwrap();
        assert!(x > 3);
        let a = m.to_state();
        assert_eq!(a.array(&Var::array("a", 1)).unwrap().apply(&[x]).unwrap(), 7);

        let g = d.parse_formula("(and (> x 3) (< x 2))").unwrap();
        assert!(matches!(s.check(&Query::new(vec![g])).unwrap(), Answer::Unsat));
    }

    #[test]
    fn floor_division_matches_evaluator() {
        let Some(mut s) = solver() else { return };
        let d = Decls::new().with(&Var::scalar("x"));
        // floor(-7 / 2) = -4 and floor(7 / -2) = -4
        let f = d.parse_formula("(and (= x -7) (distinct (div x 2) -4))").unwrap();
        assert!(matches!(s.check(&Query::new(vec![f])).unwrap(), Answer::Unsat));
        let g = d.parse_formula("(and (= x 7) (distinct (div x -2) -4))").unwrap();
        assert!(matches!(s.check(&Query::new(vec![g])).unwrap(), Answer::Unsat));
    }
}

#!/usr/bin/env python3
"""Generate the shipped 30-prompt dataset (five prompts in each of six domains).

Each record carries the prompt text, the entities the author considers
central, and complexity metadata. Dataset-level targets: mean token count
near 127, mean declared entities near 7, mean expected layer span 2.7.
Texts are authored here; requirement sentences are appended from per-domain
pools until each prompt reaches its token target, deterministically.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from kgthreads.ontology import DOMAIN_TAGS  # noqa: E402

PADDING = {
    "healthcare": [
        "The monitoring service must collect a sensor measurement stream from each device and store it in the patient profile store.",
        "Caregivers should receive a notification on their phones when the alert gateway logs a missed dose event.",
        "The reporting service generates an adherence summary report for the clinic review cycle every week.",
        "All records must respect the privacy rule and the audit event log keeps every access entry.",
        "The scheduling service books follow-up visits and the reminder service notifies patients one day ahead.",
        "Staff complete the enrollment module before the onboarding workflow grants access to patient data.",
    ],
    "manufacturing": [
        "The telemetry pipeline transmits readings from the weight sensor and the camera module to the analytics service.",
        "Supervisors need a monitoring dashboard that visualizes line throughput and flags anomalies quickly.",
        "The inventory manager tracks part consumption and updates the inventory status snapshot after each shift.",
        "Maintenance staff should get an escalation notice when the diagnostics module predicts a failure.",
        "Every inspection result lands in the audit event log so the compliance reporting requirement is met.",
        "The scheduling service plans machine downtime around the production calendar automatically.",
    ],
    "finance": [
        "The billing service reconciles invoices against the billing history table every night.",
        "Managers must approve expenses above the cost budget through the escalation process.",
        "The reporting pipeline generates a monthly summary report for the audit review cycle.",
        "Every transaction should be written to the audit event log with a tamper-evident entry.",
        "The notification service reminds account owners three days before a payment deadline.",
        "Access to financial records requires authentication and the privacy rule limits who can view them.",
    ],
    "education": [
        "The enrollment module registers students and the scheduling service assigns classroom slots.",
        "Instructors need an analytics service that visualizes quiz scores per training module.",
        "The reminder service notifies guardians about upcoming sessions and missed attendance.",
        "Progress data lives in the session history table and feeds the adherence summary report.",
        "The reporting service exports a completion summary report at the end of each review cycle.",
        "Course materials must stay behind authentication so the privacy rule holds for minors.",
    ],
    "technology": [
        "The deployment pipeline builds a docker container and the monitoring service watches the rollout.",
        "Alerts flow through the alert gateway to the on-call messaging service within a minute.",
        "Metrics land in a prometheus endpoint and a grafana dashboard visualizes error budgets.",
        "The backup service snapshots the postgres database nightly and verifies each archive.",
        "Service calls require an oauth token store lookup and a valid tls certificate.",
        "The sync daemon replicates the configuration entry set across both clusters.",
    ],
    "general": [
        "The reminder service pings members before each task and logs completion in the session history table.",
        "An admin dashboard visualizes weekly activity and highlights overdue items.",
        "The notification service sends a message through the speaker unit when someone is at the door.",
        "Sign-ups go through the enrollment module and the scheduling service balances the calendar.",
        "The inventory manager tracks supplies and warns when the stock snapshot runs low.",
        "Usage records are kept in the audit event log so disputes are easy to settle.",
    ],
}

# (id suffix, domain, scenario text, features, entities, expected layer span)
PROMPTS = [
    (
        "healthcare", 1,
        "I need a smart medicine box for my elderly mother who lives alone and forgets her pills. "
        "The box reminds her at each dose time, the dispensing controller releases the right slot, and a weight sensor confirms she took the medication. "
        "If she misses a dose, the alert gateway notifies me and her nurse.",
        ["dose reminders", "weight sensor check", "caregiver alerts", "medication schedule", "weekly adherence report"],
        ["medicine box", "reminder service", "dispensing controller", "weight sensor", "alert gateway", "medication schedule record", "caregiver"],
        4,
    ),
    (
        "healthcare", 2,
        "Our home care team wants remote vitals monitoring for thirty patients. "
        "Each patient wears a sensor that transmits heart rate and blood pressure to the monitoring service, and nurses review a dashboard between visits.",
        ["continuous vitals capture", "threshold alerts", "nurse dashboard", "patient profile sync"],
        ["vitals sensor", "monitoring service", "nurse dashboard", "patient profile store", "alert gateway", "telemetry pipeline", "nurse"],
        3,
    ),
    (
        "healthcare", 3,
        "The pharmacy needs refill tracking tied to patient adherence. "
        "When the dose event log shows a patient running low, the inventory manager checks stock and the notification service offers a refill.",
        ["refill prediction", "stock checks", "patient notifications", "adherence summary"],
        ["pharmacy", "dose event log", "inventory manager", "notification service", "adherence summary report", "medication schedule record", "refill offer"],
        3,
    ),
    (
        "healthcare", 4,
        "We run a rehabilitation clinic and want an exercise tracker for recovering patients. "
        "Patients log sessions on a tablet, the analytics service scores progress, and a clinician gets an escalation when progress stalls for two weeks.",
        ["session logging", "progress scoring", "clinician escalation", "weekly summaries"],
        ["exercise tracker", "session history table", "analytics service", "escalation process", "clinician", "summary report", "patient"],
        3,
    ),
    (
        "healthcare", 5,
        "Our clinic schedules appointments by phone today and misses too many follow-ups. "
        "I want the scheduling service to book visits, the reminder service to notify patients, and wearable telemetry to flag who needs an earlier slot.",
        ["appointment booking", "patient reminders", "wearable telemetry", "priority flags"],
        ["scheduling service", "reminder service", "telemetry pipeline", "appointment", "patient", "monitoring service", "clinic"],
        3,
    ),
    (
        "manufacturing", 1,
        "Our production line stops without warning and we find out an hour late. "
        "I want sensors on each station streaming to the monitoring service, with an alert gateway that pages the floor supervisor within seconds of a stall.",
        ["station sensors", "real-time alerts", "supervisor paging", "downtime log"],
        ["production line", "station sensor", "monitoring service", "alert gateway", "supervisor", "downtime log", "telemetry pipeline"],
        3,
    ),
    (
        "manufacturing", 2,
        "The warehouse loses track of parts between receiving and assembly. "
        "Workers should scan barcodes at each handoff so the inventory manager keeps a live stock snapshot and flags shortages before the line starves.",
        ["barcode scanning", "live stock levels", "shortage warnings", "handoff history"],
        ["warehouse", "barcode scanner", "inventory manager", "inventory status snapshot", "assembly line", "shortage alert", "part"],
        2,
    ),
    (
        "manufacturing", 3,
        "We replace conveyor motors on a fixed calendar and still get surprise failures. "
        "Vibration sensors should feed the diagnostics module, which predicts wear and schedules maintenance before a breakdown.",
        ["vibration monitoring", "failure prediction", "maintenance scheduling", "parts ordering"],
        ["conveyor motor", "vibration sensor", "diagnostics module", "maintenance schedule", "telemetry pipeline", "scheduling service", "spare part"],
        3,
    ),
    (
        "manufacturing", 4,
        "Quality inspection is manual and defects slip through to customers. "
        "I want a camera module at the end of each line, an analytics service that classifies defects, and every result written to the audit event log.",
        ["image capture", "defect classification", "audit trail", "reject routing"],
        ["camera module", "quality inspection", "analytics service", "defect log", "audit event log", "production line", "defect"],
        3,
    ),
    (
        "manufacturing", 5,
        "Plant energy bills keep climbing and nobody knows which floor is responsible. "
        "Meters on each floor should stream consumption through the telemetry pipeline into a dashboard that compares floors against the cost budget.",
        ["per-floor metering", "consumption dashboard", "budget comparison", "peak alerts"],
        ["energy meter", "telemetry pipeline", "monitoring dashboard", "cost budget", "plant floor", "alert gateway", "energy meter reading"],
        2,
    ),
    (
        "finance", 1,
        "Expense reports take weeks because receipts travel by email. "
        "Employees should photograph receipts in an app, the billing service matches them to card transactions, and managers approve from a queue.",
        ["receipt capture", "transaction matching", "approval queue", "reimbursement tracking"],
        ["expense report", "receipt", "billing service", "approval queue", "card transaction", "manager", "reimbursement"],
        2,
    ),
    (
        "finance", 2,
        "Our subscription billing drifts out of sync with the ledger every month. "
        "I want the billing service to reconcile invoices against the billing history table nightly and raise an escalation for any mismatch over ten dollars.",
        ["nightly reconciliation", "mismatch escalation", "ledger sync", "invoice archive"],
        ["billing service", "invoice", "billing history table", "ledger", "escalation process", "reconciliation report", "mismatch"],
        3,
    ),
    (
        "finance", 3,
        "Card fraud shows up days after the damage is done. "
        "Transaction streams should flow through the analytics service in real time, and the alert gateway must notify the fraud team within a minute of a suspicious pattern.",
        ["stream scoring", "minute-level alerts", "case queue", "pattern rules"],
        ["transaction stream", "analytics service", "alert gateway", "fraud team", "suspicious pattern", "case queue", "audit event log"],
        3,
    ),
    (
        "finance", 4,
        "Department heads cannot see spending until the quarter closes. "
        "I need a budget dashboard that visualizes each cost budget in real time, pulling from the billing history table and warning at eighty percent.",
        ["live budget view", "threshold warnings", "drill-down by team", "monthly export"],
        ["budget dashboard", "cost budget", "billing history table", "department", "warning threshold", "summary report", "spending"],
        2,
    ),
    (
        "finance", 5,
        "Invoice approval stalls whenever one approver is on leave. "
        "The workflow should route invoices by amount, escalate after two idle days, and keep the whole trail in the audit event log.",
        ["amount-based routing", "idle escalation", "delegate approvers", "full audit trail"],
        ["invoice", "approval workflow", "escalation process", "audit event log", "approver", "routing rule"],
        3,
    ),
    (
        "education", 1,
        "New staff take months to finish onboarding because nobody tracks training. "
        "Each training module should report completion to the enrollment module, and the reminder service nudges anyone idle for a week.",
        ["module completion tracking", "idle reminders", "manager visibility", "certificate export"],
        ["training module", "enrollment module", "reminder service", "onboarding workflow", "completion record", "manager", "staff"],
        3,
    ),
    (
        "education", 2,
        "Guardians find out about absences days later. "
        "The attendance system should record check-ins at the classroom door and have the notification service message guardians within ten minutes of a missed session.",
        ["door check-ins", "guardian messages", "absence history", "weekly digest"],
        ["attendance system", "classroom", "notification service", "guardian", "session history table", "check-in record", "absence"],
        2,
    ),
    (
        "education", 3,
        "Instructors grade quizzes but never see patterns across cohorts. "
        "I want the analytics service to aggregate quiz scores per training module and visualize weak topics on an instructor dashboard.",
        ["score aggregation", "topic heatmap", "cohort comparison", "export to csv"],
        ["quiz score", "analytics service", "training module", "instructor dashboard", "cohort", "summary report", "weak topic"],
        3,
    ),
    (
        "education", 4,
        "Course enrollment is first-come and popular labs overflow. "
        "The enrollment module should manage waitlists, the scheduling service should balance sections, and students get a notification the moment a seat opens.",
        ["waitlist management", "section balancing", "seat notifications", "enrollment caps"],
        ["enrollment module", "waitlist", "scheduling service", "course section", "notification service", "student", "seat"],
        2,
    ),
    (
        "education", 5,
        "Lab equipment disappears and double-bookings waste sessions. "
        "I need a booking system where students reserve instruments, the inventory manager tracks returns, and usage lands in the audit event log.",
        ["instrument reservations", "return tracking", "usage history", "overdue alerts"],
        ["booking system", "lab equipment", "inventory manager", "audit event log", "student", "reservation record", "alert gateway"],
        3,
    ),
    (
        "technology", 1,
        "Deployments fail silently and we notice when customers complain. "
        "The deployment pipeline should report each stage to the monitoring service, and a failed health check must trigger an automatic rollback plus a page.",
        ["stage reporting", "health checks", "auto rollback", "on-call paging"],
        ["deployment pipeline", "monitoring service", "health check", "rollback", "alert gateway", "docker container", "deployment stage"],
        3,
    ),
    (
        "technology", 2,
        "Our public api has no rate limiting and one client can starve the rest. "
        "The api gateway should enforce per-token quotas from the oauth token store and expose usage counters to a grafana dashboard.",
        ["per-token quotas", "usage counters", "burst allowance", "client dashboards"],
        ["api gateway", "rate limit", "oauth token store", "usage counter", "grafana dashboard", "client", "quota"],
        2,
    ),
    (
        "technology", 3,
        "Log files sit on forty hosts and debugging means ssh roulette. "
        "I want agents shipping logs into one store, the analytics service detecting anomalies, and the alert gateway paging us on error spikes.",
        ["central log store", "anomaly detection", "error spike paging", "retention policy"],
        ["log agent", "log store", "analytics service", "alert gateway", "anomaly detector", "retention plan", "error spike"],
        3,
    ),
    (
        "technology", 4,
        "Our kubernetes cluster scales late and pods crash during traffic spikes. "
        "Autoscaling should react to a prometheus endpoint, and the telemetry pipeline must keep per-service utilization history for capacity planning.",
        ["metric-driven autoscaling", "utilization history", "capacity reports", "spike simulation"],
        ["kubernetes cluster", "autoscaler", "prometheus endpoint", "telemetry pipeline", "utilization history", "capacity report"],
        3,
    ),
    (
        "technology", 5,
        "Backups run but nobody has ever restored one. "
        "The backup service should snapshot the postgres database nightly, verify each archive, and run a scripted restore drill every month with a report.",
        ["nightly snapshots", "archive verification", "restore drills", "drill reports"],
        ["backup service", "postgres database", "archive", "restore drill", "verification report", "summary report", "snapshot"],
        2,
    ),
    (
        "general", 1,
        "Our shared house argues about chores every week. "
        "I want a rotation where the reminder service pings whoever is on duty, tasks get checked off on a tablet, and a dashboard shames the laggards gently.",
        ["chore rotation", "duty reminders", "check-off tablet", "weekly dashboard"],
        ["chore rotation", "reminder service", "task list", "tablet", "dashboard", "session history table"],
        2,
    ),
    (
        "general", 2,
        "Our neighborhood association posts events on paper that nobody reads. "
        "An event board should let organizers publish once, then the notification service delivers by email or speaker announcement in the common room.",
        ["single posting", "email delivery", "room announcements", "rsvp counts"],
        ["event board", "organizer", "notification service", "speaker unit", "rsvp count", "common room"],
        2,
    ),
    (
        "general", 3,
        "Packages for our small office vanish into the mailroom. "
        "A check-in kiosk should photograph each label with the camera module, log arrival in the audit event log, and notify the recipient until pickup.",
        ["label photos", "arrival log", "recipient nudges", "pickup confirmation"],
        ["package", "check-in kiosk", "camera module", "audit event log", "notification service", "recipient", "mailroom"],
        3,
    ),
    (
        "general", 4,
        "Visitors wander our building looking for the right floor. "
        "A lobby kiosk should register guests through the enrollment module, print a badge, and tell the host through the messaging service that their guest arrived.",
        ["guest registration", "badge printing", "host notification", "visit history"],
        ["lobby kiosk", "visitor", "enrollment module", "badge printer", "messaging service", "host"],
        3,
    ),
    (
        "general", 5,
        "Meeting rooms are booked solid yet stand empty half the day. "
        "Occupancy sensors should release a room after ten idle minutes, the scheduling service rebooks the queue, and usage lands in a monthly report.",
        ["idle release", "queue rebooking", "occupancy history", "monthly report"],
        ["meeting room", "occupancy sensor", "scheduling service", "booking queue", "usage report", "monitoring service"],
        3,
    ),
]

TOKEN_TARGET = 127


def build_record(domain: str, n: int, scenario: str, features, entities, span: int) -> dict:
    pool = PADDING[domain]
    text = scenario
    pad_index = (n - 1) % len(pool)
    while len(text.split()) + 14 < TOKEN_TARGET:
        text += " " + pool[pad_index]
        pad_index = (pad_index + 1) % len(pool)
    text += "\nFeatures: " + ", ".join(features) + "."
    return {
        "id": f"{domain}-{n:02d}",
        "domain": domain,
        "text": text,
        "entities": entities,
        "token_count": len(text.split()),
        "entity_count": len(entities),
        "expected_layer_span": span,
    }


def main() -> None:
    records = [build_record(d, n, s, f, e, span) for d, n, s, f, e, span in PROMPTS]
    assert len(records) == 30
    assert len({r["id"] for r in records}) == 30
    per_domain = {tag: sum(1 for r in records if r["domain"] == tag) for tag in DOMAIN_TAGS}
    assert all(per_domain[t] == 5 for t in DOMAIN_TAGS), per_domain
    mean_tokens = sum(r["token_count"] for r in records) / 30
    mean_entities = sum(r["entity_count"] for r in records) / 30
    mean_span = sum(r["expected_layer_span"] for r in records) / 30
    assert 115 <= mean_tokens <= 140, mean_tokens
    assert abs(mean_span - 2.7) < 1e-9, mean_span

    out_dir = Path(__file__).resolve().parents[1] / "src" / "kgthreads" / "data"
    dataset = {"name": "desk-30", "prompts": records}
    (out_dir / "prompts.json").write_text(
        json.dumps(dataset, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out_dir / "desk_prompt.txt").write_text(records[0]["text"] + "\n", encoding="utf-8")
    print(f"wrote {out_dir / 'prompts.json'} and desk_prompt.txt")
    print(
        f"mean tokens={mean_tokens:.1f} mean entities={mean_entities:.2f} "
        f"mean span={mean_span:.2f}"
    )


if __name__ == "__main__":
    main()

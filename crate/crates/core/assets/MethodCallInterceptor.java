package vulnreach.support;

import java.lang.instrument.Instrumentation;
import java.util.ArrayList;
import java.util.List;
import java.util.regex.Pattern;

import net.bytebuddy.agent.ByteBuddyAgent;
import net.bytebuddy.agent.builder.AgentBuilder;
import net.bytebuddy.asm.Advice;
import net.bytebuddy.matcher.ElementMatchers;

/**
 * Records invocations of one library method while a test runs and checks the
 * arguments it received against the expected trigger values.
 *
 * <p>Needs {@code net.bytebuddy:byte-buddy} and {@code net.bytebuddy:byte-buddy-agent}
 * on the test classpath. Conditions compare stringified arguments only, using
 * {@code contains}, {@code equals} or {@code matches}; numbers, streams and files
 * are compared through their {@code toString()} form.
 */
public final class MethodCallInterceptor {

    private static volatile boolean triggered;
    private static volatile boolean conditionMet;
    private static final List<String[]> CONDITIONS = new ArrayList<>();
    private static Object[] expected = new Object[0];

    private MethodCallInterceptor() {
    }

    /** Starts watching {@code className.methodName}, expecting the given argument values. */
    public static synchronized void interceptor(String className, String methodName, Object[] expectedArgs) {
        triggered = false;
        conditionMet = false;
        CONDITIONS.clear();
        expected = expectedArgs == null ? new Object[0] : expectedArgs.clone();
        Instrumentation instrumentation = ByteBuddyAgent.install();
        new AgentBuilder.Default()
                .disableClassFormatChanges()
                .with(AgentBuilder.RedefinitionStrategy.RETRANSFORMATION)
                .type(ElementMatchers.named(className))
                .transform((builder, type, loader, module, domain) ->
                        builder.visit(Advice.to(CallAdvice.class).on(ElementMatchers.named(methodName))))
                .installOn(instrumentation);
    }

    public static void interceptor(Class<?> type, String methodName, Object[] expectedArgs) {
        interceptor(type.getName(), methodName, expectedArgs);
    }

    /** Adds a trigger condition; with none registered, every expected value must be contained in some argument. */
    public static synchronized void condition(String predicate, String value) {
        CONDITIONS.add(new String[] {predicate, value});
    }

    public static boolean isTriggered() {
        return triggered;
    }

    public static boolean isConditionMet() {
        return conditionMet;
    }

    public static void record(Object[] args) {
        triggered = true;
        if (satisfied(args == null ? new Object[0] : args)) {
            conditionMet = true;
        }
    }

    private static synchronized boolean satisfied(Object[] args) {
        List<String[]> checks = new ArrayList<>(CONDITIONS);
        if (checks.isEmpty()) {
            for (Object value : expected) {
                checks.add(new String[] {"contains", String.valueOf(value)});
            }
        }
        for (String[] check : checks) {
            boolean hit = false;
            for (Object arg : args) {
                if (holds(check[0], String.valueOf(arg), check[1])) {
                    hit = true;
                    break;
                }
            }
            if (!hit) {
                return false;
            }
        }
        return true;
    }

    private static boolean holds(String predicate, String actual, String value) {
        switch (predicate) {
            case "equals":
                return actual.equals(value);
            case "matches":
                return Pattern.compile(value).matcher(actual).find();
            default:
                return actual.contains(value);
        }
    }

    public static class CallAdvice {
        @Advice.OnMethodEnter
        public static void enter(@Advice.AllArguments Object[] args) {
            MethodCallInterceptor.record(args);
        }
    }
}
